/* tslint:disable */
/* eslint-disable */

/**
 * A detector trained in the page for one soil preset.
 */
export class Demo {
    free(): void;
    [Symbol.dispose](): void;
    /**
     * Runs the three-phase detector; returns `{"report": .., "text": ..}`.
     */
    classify(scenario: string, snr_db: number, seed: bigint): string;
    /**
     * Per-class order and RMSE at that order, as JSON.
     */
    models(): string;
    /**
     * Simulates a training suite for every class and fits the bundle.
     */
    constructor(soil: string);
    /**
     * Measured feature vectors of the three injections for a breakage set
     * such as `R1e3/4`, `R1i2/4+R2e1/4` or `healthy`.
     */
    simulate(scenario: string, snr_db: number, seed: bigint): string;
}

/**
 * RMSE(m) for m = 0..=n of one class at one SNR, as `[{"m":..,"rmse":..}]`.
 */
export function rmse_curve(_class: string, soil: string, snr_db: number, trials: number): string;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly __wbg_demo_free: (a: number, b: number) => void;
    readonly demo_classify: (a: number, b: number, c: number, d: number, e: bigint) => [number, number, number, number];
    readonly demo_models: (a: number) => [number, number, number, number];
    readonly demo_new: (a: number, b: number) => [number, number, number];
    readonly demo_simulate: (a: number, b: number, c: number, d: number, e: bigint) => [number, number, number, number];
    readonly rmse_curve: (a: number, b: number, c: number, d: number, e: number, f: number) => [number, number, number, number];
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
