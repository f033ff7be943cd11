/* tslint:disable */
/* eslint-disable */

/**
 * Result of convolving two random vector sequences, before and after a rotation.
 */
export class ConvDemo {
    private constructor();
    free(): void;
    [Symbol.dispose](): void;
    readonly equivariance_error: number;
    readonly fft_direct_error: number;
    /**
     * Degree-1 output `conv(q, k)` then rotated, as `(x, y, z)` triples per token.
     */
    readonly output: Float64Array;
    /**
     * Degree-1 output `conv(Rq, Rk)` as `(x, y, z)` triples per token.
     */
    readonly rotated_output: Float64Array;
    readonly tokens: number;
}

/**
 * Cost curves indexed by maximum degree `L = 1..=max_l`.
 */
export class Curves {
    private constructor();
    free(): void;
    [Symbol.dispose](): void;
    readonly degrees: Float64Array;
    readonly dense_bytes: Float64Array;
    readonly dense_flops: Float64Array;
    readonly sparse_bytes: Float64Array;
    readonly sparse_flops: Float64Array;
}

/**
 * Dense view of one coupling table: `rows = 2J+1`, `cols = (2l+1)(2l'+1)`.
 */
export class TableView {
    private constructor();
    free(): void;
    [Symbol.dispose](): void;
    readonly cols: number;
    readonly density: number;
    readonly nnz: number;
    readonly rows: number;
    /**
     * Row-major values.
     */
    readonly values: Float64Array;
}

export function cgTable(j: number, l1: number, l2: number, real: boolean): TableView;

export function convDemo(tokens: number, seed: number, ax: number, ay: number, az: number, angle_deg: number): ConvDemo;

export function costCurves(max_l: number): Curves;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly __wbg_convdemo_free: (a: number, b: number) => void;
    readonly __wbg_curves_free: (a: number, b: number) => void;
    readonly __wbg_tableview_free: (a: number, b: number) => void;
    readonly cgTable: (a: number, b: number, c: number, d: number) => [number, number, number];
    readonly convDemo: (a: number, b: number, c: number, d: number, e: number, f: number) => [number, number, number];
    readonly convdemo_equivariance_error: (a: number) => number;
    readonly convdemo_fft_direct_error: (a: number) => number;
    readonly convdemo_output: (a: number) => [number, number];
    readonly convdemo_rotated_output: (a: number) => [number, number];
    readonly convdemo_tokens: (a: number) => number;
    readonly costCurves: (a: number) => [number, number, number];
    readonly curves_degrees: (a: number) => [number, number];
    readonly curves_dense_bytes: (a: number) => [number, number];
    readonly curves_dense_flops: (a: number) => [number, number];
    readonly curves_sparse_bytes: (a: number) => [number, number];
    readonly curves_sparse_flops: (a: number) => [number, number];
    readonly tableview_cols: (a: number) => number;
    readonly tableview_density: (a: number) => number;
    readonly tableview_nnz: (a: number) => number;
    readonly tableview_rows: (a: number) => number;
    readonly tableview_values: (a: number) => [number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __externref_table_dealloc: (a: number) => void;
    readonly __wbindgen_free: (a: number, b: number, c: number) => void;
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
