/* tslint:disable */
/* eslint-disable */

/**
 * Result of [`letter_mixture`].
 */
export class MixtureRun {
    private constructor();
    free(): void;
    [Symbol.dispose](): void;
    arOrder(): number;
    /**
     * `|G|`, row-major, `size x size`.
     */
    hinton(): Float64Array;
    index(): number;
    /**
     * Estimated component sizes, in output order.
     */
    layout(): Uint32Array;
    /**
     * Separated samples, row-major with `size` columns.
     */
    separated(): Float64Array;
    size(): number;
}

/**
 * Result of [`rotation_ica`].
 */
export class RotationRun {
    private constructor();
    free(): void;
    [Symbol.dispose](): void;
    /**
     * Mixed samples, interleaved `x, y`.
     */
    mixed(): Float64Array;
    /**
     * `W_ICA W_PCA A`, row-major 2x2; a signed permutation when ICA works.
     */
    product(): Float64Array;
    sweeps(): number;
    /**
     * ICA output, interleaved `x, y`.
     */
    unmixed(): Float64Array;
}

export function glyphPoints(letter: string, n: number, seed: bigint): Float64Array;

export function letterMixture(letters: string, samples: number, seed: bigint): MixtureRun;

export function rotationIca(degrees: number, aspect: number, samples: number, seed: bigint): RotationRun;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly __wbg_mixturerun_free: (a: number, b: number) => void;
    readonly __wbg_rotationrun_free: (a: number, b: number) => void;
    readonly glyphPoints: (a: number, b: number, c: bigint) => [number, number, number, number];
    readonly letterMixture: (a: number, b: number, c: number, d: bigint) => [number, number, number];
    readonly mixturerun_arOrder: (a: number) => number;
    readonly mixturerun_hinton: (a: number) => [number, number];
    readonly mixturerun_index: (a: number) => number;
    readonly mixturerun_layout: (a: number) => [number, number];
    readonly mixturerun_separated: (a: number) => [number, number];
    readonly mixturerun_size: (a: number) => number;
    readonly rotationIca: (a: number, b: number, c: number, d: bigint) => [number, number, number];
    readonly rotationrun_mixed: (a: number) => [number, number];
    readonly rotationrun_product: (a: number) => [number, number];
    readonly rotationrun_sweeps: (a: number) => number;
    readonly rotationrun_unmixed: (a: number) => [number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __externref_table_dealloc: (a: number) => void;
    readonly __wbindgen_free: (a: number, b: number, c: number) => void;
    readonly __wbindgen_malloc: (a: number, b: number) => number;
    readonly __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
    readonly __wbindgen_start: () => void;
}

export type SyncInitInput = BufferSource | WebAssembly.Module;

/**
 * Instantiates the given `module`, which can either be bytes or
 * a precompiled `WebAssembly.Module`.
 *
 * @param {{ module: SyncInitInput }} module - Passing `SyncInitInput` directly is deprecated.
 *
 * @returns {InitOutput}
 */
export function initSync(module: { module: SyncInitInput } | SyncInitInput): InitOutput;

/**
 * If `module_or_path` is {RequestInfo} or {URL}, makes a request and
 * for everything else, calls `WebAssembly.instantiate` directly.
 *
 * @param {{ module_or_path: InitInput | Promise<InitInput> }} module_or_path - Passing `InitInput` directly is deprecated.
 *
 * @returns {Promise<InitOutput>}
 */
export default function __wbg_init (module_or_path?: { module_or_path: InitInput | Promise<InitInput> } | InitInput | Promise<InitInput>): Promise<InitOutput>;
