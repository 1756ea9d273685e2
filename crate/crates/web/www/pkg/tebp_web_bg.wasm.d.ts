/* tslint:disable */
/* eslint-disable */
export const memory: WebAssembly.Memory;
export const __wbg_xorcomparison_free: (a: number, b: number) => void;
export const binarize: (a: number, b: number, c: number) => [number, number, number, number];
export const compareXor: (a: number, b: number, c: number, d: bigint) => [number, number, number];
export const estimateTe: (a: number, b: number, c: number, d: number, e: number, f: number) => [number, number, number];
export const xorcomparison_ff: (a: number) => [number, number];
export const xorcomparison_fffb: (a: number) => [number, number];
export const xorcomparison_stage1_epochs: (a: number) => number;
export const xorcomparison_te_mean: (a: number) => number;
export const __wbindgen_externrefs: WebAssembly.Table;
export const __wbindgen_malloc: (a: number, b: number) => number;
export const __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
export const __externref_table_dealloc: (a: number) => void;
export const __wbindgen_free: (a: number, b: number, c: number) => void;
export const __wbindgen_start: () => void;
