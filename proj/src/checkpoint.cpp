// Copyright 2026 The RepCONC Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "repconc/checkpoint.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "repconc/index_io.hpp"

namespace repconc {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

constexpr const char* kManifest = "checkpoint.json";
constexpr const char* kFormat = "repconc-checkpoint";

void write_matrix(const fs::path& path, const MatrixD& m) {
  write_embeddings(path.string(), Matrix::cast_from(m));
}

MatrixD read_matrix(const fs::path& path) {
  return MatrixD::cast_from(read_embeddings(path.string()));
}

template <typename T>
T field(const json& j, const char* key, const std::string& source) {
  if (!j.contains(key)) throw ParseError(source, 0, std::string("missing field '") + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ParseError(source, 0, std::string("field '") + key + "' has the wrong type");
  }
}

}  // namespace

void save_checkpoint(const std::string& dir, const Checkpoint& checkpoint) {
  const Model& model = checkpoint.model;
  model.check();
  const fs::path root(dir);
  std::error_code ec;
  fs::create_directories(root, ec);
  if (ec) throw InputError("cannot create checkpoint directory " + dir + ": " + ec.message());

  json manifest;
  manifest["format"] = kFormat;
  manifest["version"] = kFormatVersion;
  manifest["dim"] = model.dim();
  manifest["num_blocks"] = model.num_blocks;
  manifest["num_centroids"] = model.num_centroids;
  manifest["rotation"] = model.rotation.enabled();
  manifest["query_encoder"] = std::string(encoder_kind_name(model.query_encoder.kind()));
  manifest["doc_encoder"] = std::string(encoder_kind_name(model.doc_encoder.kind()));
  manifest["doc_codes"] = checkpoint.doc_codes.has_value();
  manifest["info"] = checkpoint.info;

  write_matrix(root / "codebook.rcem", model.codebook);
  write_matrix(root / "query_encoder.rcem", model.query_encoder.parameters());
  write_matrix(root / "doc_encoder.rcem", model.doc_encoder.parameters());
  const fs::path rotation_path = root / "rotation.rcem";
  if (model.rotation.enabled()) {
    write_embeddings(rotation_path.string(), model.rotation.matrix());
  } else {
    fs::remove(rotation_path, ec);
  }
  const fs::path codes_path = root / "doc_codes.rccd";
  if (checkpoint.doc_codes) {
    write_codes(codes_path.string(), *checkpoint.doc_codes);
  } else {
    fs::remove(codes_path, ec);
  }

  std::ofstream out(root / kManifest, std::ios::binary | std::ios::trunc);
  out << manifest.dump(2) << '\n';
  if (!out) throw InputError("cannot write " + (root / kManifest).string());
}

Checkpoint load_checkpoint(const std::string& dir) {
  const fs::path root(dir);
  const std::string source = (root / kManifest).string();
  std::ifstream in(root / kManifest, std::ios::binary);
  if (!in) throw InputError("cannot open checkpoint manifest " + source);
  std::stringstream text;
  text << in.rdbuf();
  json manifest;
  try {
    manifest = json::parse(text.str());
  } catch (const json::parse_error& e) {
    throw ParseError(source, 0, e.what());
  }
  if (field<std::string>(manifest, "format", source) != kFormat) {
    throw ParseError(source, 0, "not a checkpoint manifest");
  }
  const auto version = field<std::uint32_t>(manifest, "version", source);
  if (version != kFormatVersion) {
    throw ParseError(source, 0, "unsupported checkpoint version " + std::to_string(version));
  }
  const auto dim = field<std::size_t>(manifest, "dim", source);
  const auto m = field<std::size_t>(manifest, "num_blocks", source);
  const auto k = field<std::size_t>(manifest, "num_centroids", source);

  Checkpoint out;
  Model& model = out.model;
  model.num_blocks = m;
  model.num_centroids = k;
  model.codebook = read_matrix(root / "codebook.rcem");
  auto make_encoder = [&](const char* key, const char* file) {
    const EncoderKind kind = parse_encoder_kind(field<std::string>(manifest, key, source));
    MatrixD params = read_matrix(root / file);
    return kind == EncoderKind::kLinear ? Encoder::linear(std::move(params))
                                        : Encoder::table(std::move(params));
  };
  model.query_encoder = make_encoder("query_encoder", "query_encoder.rcem");
  model.doc_encoder = make_encoder("doc_encoder", "doc_encoder.rcem");
  if (model.dim() != dim) {
    throw DimensionError("checkpoint: document encoder outputs " +
                         std::to_string(model.dim()) + " dims, manifest says " +
                         std::to_string(dim));
  }
  model.rotation = field<bool>(manifest, "rotation", source)
                       ? Rotation::from_matrix(read_embeddings((root / "rotation.rcem").string()))
                       : Rotation::none(dim);
  model.check();
  if (field<bool>(manifest, "doc_codes", source)) {
    out.doc_codes = read_codes((root / "doc_codes.rccd").string());
    if (out.doc_codes->num_blocks() != m) {
      throw DimensionError("checkpoint: stored codes have " +
                           std::to_string(out.doc_codes->num_blocks()) + " blocks, model has " +
                           std::to_string(m));
    }
  }
  if (manifest.contains("info")) {
    out.info = field<std::map<std::string, std::string>>(manifest, "info", source);
  }
  return out;
}

}  // namespace repconc
