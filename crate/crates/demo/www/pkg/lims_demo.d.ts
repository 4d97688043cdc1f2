/* tslint:disable */
/* eslint-disable */

/**
 * Handle held by the page.
 */
export class LimsDemo {
    free(): void;
    [Symbol.dispose](): void;
    knn(x: number, y: number, k: number): string;
    constructor(n: number, clusters: number, pivots: number, rings: number, seed: number);
    range(x: number, y: number, r: number): string;
    /**
     * Points, clusters and pivots as JSON.
     */
    snapshot(): string;
}

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly __wbg_limsdemo_free: (a: number, b: number) => void;
    readonly limsdemo_knn: (a: number, b: number, c: number, d: number) => [number, number, number, number];
    readonly limsdemo_new: (a: number, b: number, c: number, d: number, e: number) => [number, number, number];
    readonly limsdemo_range: (a: number, b: number, c: number, d: number) => [number, number, number, number];
    readonly limsdemo_snapshot: (a: number) => [number, number, number, number];
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
