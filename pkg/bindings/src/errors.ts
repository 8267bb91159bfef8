/** Error types raised by the bindings. All of them are recoverable: a failed
 * call never aborts the host process, it throws and leaves no state behind. */

/** Input validation or subprocess failure while running a binding call. */
export class BindingError extends Error {
  /** Exit code of the underlying CLI process, when one was launched.
   * 1 = I/O error, 2 = validation error, 3 = internal error. */
  readonly exitCode?: number;
  /** Captured stderr of the underlying CLI process, when one was launched. */
  readonly stderr?: string;

  constructor(message: string, options?: { exitCode?: number; stderr?: string }) {
    super(message);
    this.name = "BindingError";
    this.exitCode = options?.exitCode;
    this.stderr = options?.stderr;
  }
}

/** A buffer does not conform to the CVOL volume container format. */
export class CvolFormatError extends Error {
  constructor(message: string) {
    super(message);
    this.name = "CvolFormatError";
  }
}
