/* tslint:disable */
/* eslint-disable */
export const memory: WebAssembly.Memory;
export const __wbg_limsdemo_free: (a: number, b: number) => void;
export const limsdemo_knn: (a: number, b: number, c: number, d: number) => [number, number, number, number];
export const limsdemo_new: (a: number, b: number, c: number, d: number, e: number) => [number, number, number];
export const limsdemo_range: (a: number, b: number, c: number, d: number) => [number, number, number, number];
export const limsdemo_snapshot: (a: number) => [number, number, number, number];
export const __wbindgen_externrefs: WebAssembly.Table;
export const __externref_table_dealloc: (a: number) => void;
export const __wbindgen_free: (a: number, b: number, c: number) => void;
export const __wbindgen_start: () => void;
