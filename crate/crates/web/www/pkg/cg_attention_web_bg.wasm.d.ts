/* tslint:disable */
/* eslint-disable */
export const memory: WebAssembly.Memory;
export const __wbg_convdemo_free: (a: number, b: number) => void;
export const __wbg_curves_free: (a: number, b: number) => void;
export const __wbg_tableview_free: (a: number, b: number) => void;
export const cgTable: (a: number, b: number, c: number, d: number) => [number, number, number];
export const convDemo: (a: number, b: number, c: number, d: number, e: number, f: number) => [number, number, number];
export const convdemo_equivariance_error: (a: number) => number;
export const convdemo_fft_direct_error: (a: number) => number;
export const convdemo_output: (a: number) => [number, number];
export const convdemo_rotated_output: (a: number) => [number, number];
export const convdemo_tokens: (a: number) => number;
export const costCurves: (a: number) => [number, number, number];
export const curves_degrees: (a: number) => [number, number];
export const curves_dense_bytes: (a: number) => [number, number];
export const curves_dense_flops: (a: number) => [number, number];
export const curves_sparse_bytes: (a: number) => [number, number];
export const curves_sparse_flops: (a: number) => [number, number];
export const tableview_cols: (a: number) => number;
export const tableview_density: (a: number) => number;
export const tableview_nnz: (a: number) => number;
export const tableview_rows: (a: number) => number;
export const tableview_values: (a: number) => [number, number];
export const __wbindgen_externrefs: WebAssembly.Table;
export const __externref_table_dealloc: (a: number) => void;
export const __wbindgen_free: (a: number, b: number, c: number) => void;
export const __wbindgen_start: () => void;
