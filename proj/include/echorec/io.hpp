// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "echorec/compress.hpp"
#include "echorec/model.hpp"
#include "echorec/network.hpp"
#include "echorec/types.hpp"

namespace echorec {

// Container layout (documented in docs/container-format.md):
//   bytes 0..7    ASCII magic "ECHOREC1"
//   bytes 8..15   uint64 LE: header byte length H
//   bytes 16..16+H  UTF-8 JSON header (format_version, kind, metadata,
//                   ordered "blocks" list with name/rows/cols)
//   then per block: rows*cols IEEE-754 binary64 values, little endian,
//   column-major, in the order the header declares.

void save_model(const std::string& path, const SliceConvModel& model);
SliceConvModel load_model(const std::string& path);

void save_compressed(const std::string& path, const CompressedModel& model);
CompressedModel load_compressed(const std::string& path);

void save_network(const std::string& path, const UnrolledNet& net);
UnrolledNet load_network(const std::string& path);

void save_cube(const std::string& path, const DataCube& cube);
DataCube load_cube(const std::string& path);

void save_map(const std::string& path, const ReflectivityMap& map);
ReflectivityMap load_map(const std::string& path);

/// Header JSON for a network without writing it; storage accounting uses its size.
std::string network_header_json(const UnrolledNet& net);

/// Reads just the "kind" field of an artifact.
std::string artifact_kind(const std::string& path);

/// Shortest exact decimal for a double (round-trips bit-exactly).
std::string format_double(double v);

/// FNV-1a 64 hash of a file's bytes, lowercase hex.
std::string file_hash_hex(const std::string& path);

struct RunManifest {
    std::string command;
    std::string tool_version;
    std::map<std::string, std::string> config_snapshot;
    std::uint64_t seed = 0;
    std::vector<std::string> inputs;
    std::vector<std::string> outputs;
    std::map<std::string, std::string> output_hashes; ///< content only, no timestamps
    std::string started_at;
    std::string finished_at;
};

/// Writes `<artifact dir>/<name>.manifest.json`; every command emits one.
void write_manifest(const std::string& path, const RunManifest& manifest);
RunManifest read_manifest(const std::string& path);

} // namespace echorec
