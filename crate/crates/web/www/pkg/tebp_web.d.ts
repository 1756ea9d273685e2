/* tslint:disable */
/* eslint-disable */

/**
 * Accuracy curves of one FF and one FF+FB run on XOR.
 */
export class XorComparison {
    private constructor();
    free(): void;
    [Symbol.dispose](): void;
    readonly ff: Float64Array;
    readonly fffb: Float64Array;
    readonly stage1_epochs: number;
    /**
     * Mean of the te snapshot Stage II used.
     */
    readonly te_mean: number;
}

export function binarize(outputs: string, g: number): string;

export function compareXor(eta: number, g: number, epochs: number, seed: bigint): XorComparison;

export function estimateTe(src: string, dst: string, k: number, l: number): number;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly __wbg_xorcomparison_free: (a: number, b: number) => void;
    readonly binarize: (a: number, b: number, c: number) => [number, number, number, number];
    readonly compareXor: (a: number, b: number, c: number, d: bigint) => [number, number, number];
    readonly estimateTe: (a: number, b: number, c: number, d: number, e: number, f: number) => [number, number, number];
    readonly xorcomparison_ff: (a: number) => [number, number];
    readonly xorcomparison_fffb: (a: number) => [number, number];
    readonly xorcomparison_stage1_epochs: (a: number) => number;
    readonly xorcomparison_te_mean: (a: number) => number;
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __wbindgen_malloc: (a: number, b: number) => number;
    readonly __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
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
