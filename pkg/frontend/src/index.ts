export {
  ActivationPack,
  ClassifierSnapshot,
  CLASSIFIER_MAGIC,
  decodeClassifier,
  decodePack,
  encodeClassifier,
  encodePack,
  FORMAT_VERSION,
  ManifestEntry,
  manifestDocument,
  PACK_MAGIC,
  writeManifestFile,
} from "./format.js";
export { ExportOptions, ExportSession, Sample } from "./exporter.js";
export { CaptureTarget, ClassifierHead, FeatureHook, TwoLayerNet } from "./model.js";
export { deriveRng, Rng } from "./rng.js";
