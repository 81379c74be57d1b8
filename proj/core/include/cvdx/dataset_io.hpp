// dataset_io.hpp - on-disk dataset layout
//
//   <dir>/manifest.jsonl              one JSON row per case
//   <dir>/cases/<case_id>.f32         raw little-endian float32 [T,C,H,W]
//   <dir>/cases/<case_id>.hdr.json    shape / dtype / stage_ids sidecar
//
// The round trip is lossless field by field.
#pragma once

#include <string>
#include <vector>

#include "cvdx/synthworld.hpp"

namespace cvdx::io {

// returns the manifest path; creates the directory if needed
std::string persist_dataset(const std::vector<world::VideoRecord>& records,
                            const std::string& directory);

// throws LoadError identifying the offending row / path on any corruption
std::vector<world::VideoRecord> load_dataset(const std::string& directory);

}  // namespace cvdx::io
