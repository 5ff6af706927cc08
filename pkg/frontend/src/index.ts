export { chunkCount, chunkIds, chunkSpans, DEFAULT_CHUNK_SIZE, DEFAULT_OVERLAP } from "./chunking.js";
export { decodeContainer, encodeContainer, readContainer, writeContainer } from "./container.js";
export type { EmbeddingItem } from "./container.js";
export { StubEncoder, loadTransformersEncoder } from "./encoder.js";
export type { Encoder } from "./encoder.js";
export { embedDocument, embedDocuments } from "./embed.js";
export type { Document, EmbedJob, EmbedResult } from "./embed.js";
export { EncodingError, FormatError, ModelLoadError } from "./errors.js";
export { meanPool } from "./pooling.js";
export {
  basicTokenize,
  loadVocabulary,
  tokenizeToIds,
  tokenizeToPieces,
  vocabularyFromTokens,
  wordToPieces,
  CLS_TOKEN,
  PAD_TOKEN,
  SEP_TOKEN,
  UNK_TOKEN,
} from "./wordpiece.js";
export type { Vocabulary } from "./wordpiece.js";
