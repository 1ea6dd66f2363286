#pragma once

#include <string>

#include "cpn/network.hpp"

namespace cpn {

/// Versioned binary model container: magic "CPNM", format version,
/// architecture, template set, metadata, then raw little-endian f32
/// parameter blobs per convolution layer in layer order. Save/load
/// round-trips byte-exactly.
void save_model(const Model<float>& model, const std::string& path);
Model<float> load_model(const std::string& path);

}  // namespace cpn
