/* tslint:disable */
/* eslint-disable */

export class Playground {
    free(): void;
    [Symbol.dispose](): void;
    /**
     * Every answer pair as `u -> v` lines, at most `limit` of them, after a
     * count line. Unsafe queries fall back to relational evaluation.
     */
    all_pairs(text: string, limit: number): string;
    /**
     * The bundled example grammar with its example run.
     */
    static bundled(): Playground;
    /**
     * Replaces the current run by a random one of roughly `edges` edges.
     */
    generate(edges: number, seed: number): string;
    /**
     * Parses a spec and derives a small run from it.
     */
    constructor(spec_text: string);
    /**
     * Node names as `NAME:OCC`, in run order.
     */
    node_names(): string[];
    num_edges(): number;
    num_nodes(): number;
    /**
     * Answers one pair from the two node labels alone.
     */
    pairwise(text: string, u: string, v: string): boolean;
    run_text(): string;
    /**
     * The minimal DFA of the query followed by the safety report.
     */
    safety(text: string): string;
    spec_text(): string;
}

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly __wbg_playground_free: (a: number, b: number) => void;
    readonly playground_all_pairs: (a: number, b: number, c: number, d: number) => [number, number, number, number];
    readonly playground_bundled: () => number;
    readonly playground_generate: (a: number, b: number, c: number) => [number, number];
    readonly playground_new: (a: number, b: number) => [number, number, number];
    readonly playground_node_names: (a: number) => [number, number];
    readonly playground_num_edges: (a: number) => number;
    readonly playground_num_nodes: (a: number) => number;
    readonly playground_pairwise: (a: number, b: number, c: number, d: number, e: number, f: number, g: number) => [number, number, number];
    readonly playground_run_text: (a: number) => [number, number];
    readonly playground_safety: (a: number, b: number, c: number) => [number, number, number, number];
    readonly playground_spec_text: (a: number) => [number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __wbindgen_malloc: (a: number, b: number) => number;
    readonly __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
    readonly __externref_table_dealloc: (a: number) => void;
    readonly __wbindgen_free: (a: number, b: number, c: number) => void;
    readonly __externref_drop_slice: (a: number, b: number) => void;
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
