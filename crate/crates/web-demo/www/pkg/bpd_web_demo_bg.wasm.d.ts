/* tslint:disable */
/* eslint-disable */
export const memory: WebAssembly.Memory;
export const beam_split_track: (a: number, b: number, c: number) => [number, number, number, number];
export const estimator_names: () => [number, number];
export const run_trial: (a: number, b: number, c: number) => [number, number, number, number];
export const xi_heatmap: (a: number, b: number, c: number) => [number, number, number, number];
export const __wbindgen_externrefs: WebAssembly.Table;
export const __externref_table_dealloc: (a: number) => void;
export const __wbindgen_free: (a: number, b: number, c: number) => void;
export const __wbindgen_start: () => void;
