/** Error types for the embedding exporter. */

/** The requested encoder model could not be loaded. */
export class ModelLoadError extends Error {
  constructor(message: string, options?: { cause?: unknown }) {
    super(message, options);
    this.name = "ModelLoadError";
  }
}

/** One document could not be encoded; the pipeline skips it with a tally. */
export class EncodingError extends Error {
  constructor(message: string) {
    super(message);
    this.name = "EncodingError";
  }
}

/** An SCHB file is corrupt or has an unsupported layout. */
export class FormatError extends Error {
  readonly offset: number | null;

  constructor(message: string, offset: number | null = null) {
    super(offset === null ? message : `${message} (at byte offset ${offset})`);
    this.name = "FormatError";
    this.offset = offset;
  }
}
