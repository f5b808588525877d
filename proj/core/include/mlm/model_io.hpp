#ifndef MLM_MODEL_IO_HPP
#define MLM_MODEL_IO_HPP

#include <string>

#include "mlm/pipeline.hpp"

namespace mlm {

inline constexpr int kModelFormatVersion = 1;

/// Writes the versioned model document. Serialization is deterministic:
/// rerunning a seeded pipeline reproduces the file byte for byte.
void save_model(const TrainedArtifact& artifact, const std::string& path);

/// Rejects unknown format versions (VersionMismatch) and malformed
/// documents (CorruptDocument). Predictions round-trip bit-identically.
TrainedArtifact load_model(const std::string& path);

std::string model_to_json(const TrainedArtifact& artifact);
TrainedArtifact model_from_json(const std::string& text);

}  // namespace mlm

#endif  // MLM_MODEL_IO_HPP
