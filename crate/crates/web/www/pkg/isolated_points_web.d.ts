/* tslint:disable */
/* eslint-disable */

/**
 * Classifies a region where all generated points sit on one true point.
 */
export function classify_region(true_mass: number, gen_masses: Float64Array, sigma: number, lambda: number, mu: number): string;

/**
 * Speed per step at which an isolated generated point of unit mass escapes
 * along a straight line, for an exact RBF discriminator.
 */
export function escape_velocity(sigma: number, eta_d: number, eta_g: number, lambda: number): number;

/**
 * Trains on the four-point circle and returns the generated trajectories.
 */
export function simulate(request: string): string;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly classify_region: (a: number, b: number, c: number, d: number, e: number, f: number) => [number, number, number, number];
    readonly escape_velocity: (a: number, b: number, c: number, d: number) => [number, number, number];
    readonly simulate: (a: number, b: number) => [number, number, number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __wbindgen_malloc: (a: number, b: number) => number;
    readonly __externref_table_dealloc: (a: number) => void;
    readonly __wbindgen_free: (a: number, b: number, c: number) => void;
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
