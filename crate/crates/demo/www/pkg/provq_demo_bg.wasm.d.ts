/* tslint:disable */
/* eslint-disable */
export const memory: WebAssembly.Memory;
export const __wbg_playground_free: (a: number, b: number) => void;
export const playground_all_pairs: (a: number, b: number, c: number, d: number) => [number, number, number, number];
export const playground_bundled: () => number;
export const playground_generate: (a: number, b: number, c: number) => [number, number];
export const playground_new: (a: number, b: number) => [number, number, number];
export const playground_node_names: (a: number) => [number, number];
export const playground_num_edges: (a: number) => number;
export const playground_num_nodes: (a: number) => number;
export const playground_pairwise: (a: number, b: number, c: number, d: number, e: number, f: number, g: number) => [number, number, number];
export const playground_run_text: (a: number) => [number, number];
export const playground_safety: (a: number, b: number, c: number) => [number, number, number, number];
export const playground_spec_text: (a: number) => [number, number];
export const __wbindgen_externrefs: WebAssembly.Table;
export const __wbindgen_malloc: (a: number, b: number) => number;
export const __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
export const __externref_table_dealloc: (a: number) => void;
export const __wbindgen_free: (a: number, b: number, c: number) => void;
export const __externref_drop_slice: (a: number, b: number) => void;
export const __wbindgen_start: () => void;
