/* tslint:disable */
/* eslint-disable */

/**
 * Markdown table of every theory on a noisy copy PD where the copy
 * matches with probability `percent / 100`.
 */
export function noisy_copy(percent: number): string;

/**
 * GL verdict for `formula` under `definitions` (one `atom := formula`
 * per line), plus a Hilbert proof when one turns up within `rounds`.
 */
export function prove(definitions: string, formula: string, rounds: number): string;

/**
 * Evaluate every theory on a builtin name or `.dtp` source text and render
 * the report as `json`, `csv` or `md`.
 */
export function run_report(problem: string, format: string): string;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly noisy_copy: (a: number) => [number, number, number, number];
    readonly prove: (a: number, b: number, c: number, d: number, e: number) => [number, number, number, number];
    readonly run_report: (a: number, b: number, c: number, d: number) => [number, number, number, number];
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
