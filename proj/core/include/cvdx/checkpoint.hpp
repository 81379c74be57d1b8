// checkpoint.hpp - versioned binary checkpoint container
//
// Layout: 8-byte magic "CVDXCKPT", uint32 header length, JSON header
// (schema_version, model metadata, array directory), then the named parameter
// arrays as raw little-endian float32 in directory order.
#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "cvdx/nn.hpp"

namespace cvdx::io {

struct CheckpointMeta {
    int schema_version = 1;
    // free-form model metadata (K, image_size, channels, widths, ...)
    std::map<std::string, double> fields;
    std::string kind;  // "generator" | "learner" | ...
};

void save_checkpoint(const std::string& path, const CheckpointMeta& meta,
                     const nn::ParamStore& params);

// loads values into an already constructed ParamStore with matching names and
// shapes; returns the stored metadata. Throws LoadError on any mismatch.
CheckpointMeta load_checkpoint(const std::string& path, nn::ParamStore& params);

// reads only the metadata header
CheckpointMeta peek_checkpoint(const std::string& path);

// multi-part models (e.g. encoder + transformer + head) stored in one file;
// array names are "<prefix>/<param>"
using StoreParts = std::vector<std::pair<std::string, const nn::ParamStore*>>;
using MutStoreParts = std::vector<std::pair<std::string, nn::ParamStore*>>;
void save_checkpoint_parts(const std::string& path, const CheckpointMeta& meta,
                           const StoreParts& parts);
CheckpointMeta load_checkpoint_parts(const std::string& path, const MutStoreParts& parts);

}  // namespace cvdx::io
