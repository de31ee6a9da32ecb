/* tslint:disable */
/* eslint-disable */
export const memory: WebAssembly.Memory;
export const __wbg_mixturerun_free: (a: number, b: number) => void;
export const __wbg_rotationrun_free: (a: number, b: number) => void;
export const glyphPoints: (a: number, b: number, c: bigint) => [number, number, number, number];
export const letterMixture: (a: number, b: number, c: number, d: bigint) => [number, number, number];
export const mixturerun_arOrder: (a: number) => number;
export const mixturerun_hinton: (a: number) => [number, number];
export const mixturerun_index: (a: number) => number;
export const mixturerun_layout: (a: number) => [number, number];
export const mixturerun_separated: (a: number) => [number, number];
export const mixturerun_size: (a: number) => number;
export const rotationIca: (a: number, b: number, c: number, d: bigint) => [number, number, number];
export const rotationrun_mixed: (a: number) => [number, number];
export const rotationrun_product: (a: number) => [number, number];
export const rotationrun_sweeps: (a: number) => number;
export const rotationrun_unmixed: (a: number) => [number, number];
export const __wbindgen_externrefs: WebAssembly.Table;
export const __externref_table_dealloc: (a: number) => void;
export const __wbindgen_free: (a: number, b: number, c: number) => void;
export const __wbindgen_malloc: (a: number, b: number) => number;
export const __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
export const __wbindgen_start: () => void;
