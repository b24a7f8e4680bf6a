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

#include "repconc/index_io.hpp"

#include <zlib.h>

#include <algorithm>
#include <bit>
#include <charconv>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string_view>

namespace repconc {
namespace {

constexpr char kEmbeddingMagic[4] = {'R', 'C', 'E', 'M'};
constexpr char kIndexMagic[4] = {'R', 'C', 'I', 'X'};
constexpr char kCodesMagic[4] = {'R', 'C', 'C', 'D'};

class ByteWriter {
 public:
  void magic(const char (&m)[4]) { bytes_.insert(bytes_.end(), m, m + 4); }
  void u8(std::uint8_t v) { bytes_.push_back(v); }
  void u32(std::uint32_t v) {
    for (int s = 0; s < 32; s += 8) bytes_.push_back(static_cast<std::uint8_t>(v >> s));
  }
  void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
  void floats(std::span<const float> values) {
    for (float v : values) f32(v);
  }
  void raw(std::span<const std::uint8_t> values) {
    bytes_.insert(bytes_.end(), values.begin(), values.end());
  }
  std::vector<std::uint8_t>& bytes() { return bytes_; }

 private:
  std::vector<std::uint8_t> bytes_;
};

// Bounds-checked reader; `fail` decides which error a short read raises.
class ByteReader {
 public:
  ByteReader(const std::uint8_t* data, std::size_t size, bool index_file)
      : data_(data), size_(size), index_file_(index_file) {}

  std::size_t position() const noexcept { return pos_; }
  std::size_t remaining() const noexcept { return size_ - pos_; }

  void need(std::size_t n, const std::string& section) const {
    if (remaining() < n) {
      fail(section, "truncated: need " + std::to_string(n) + " bytes, " +
                        std::to_string(remaining()) + " left");
    }
  }
  bool magic(const char (&m)[4], const std::string& section) {
    need(4, section);
    const bool ok = std::memcmp(data_ + pos_, m, 4) == 0;
    pos_ += 4;
    return ok;
  }
  std::uint8_t u8(const std::string& section) {
    need(1, section);
    return data_[pos_++];
  }
  std::uint32_t u32(const std::string& section) {
    need(4, section);
    std::uint32_t v = 0;
    for (int s = 0; s < 4; ++s) v |= static_cast<std::uint32_t>(data_[pos_ + s]) << (8 * s);
    pos_ += 4;
    return v;
  }
  void floats(std::span<float> out, const std::string& section) {
    need(out.size() * 4, section);
    for (float& v : out) {
      v = std::bit_cast<float>(u32(section));
      if (!std::isfinite(v)) fail(section, "non-finite value");
    }
  }
  void raw(std::span<std::uint8_t> out, const std::string& section) {
    need(out.size(), section);
    std::copy_n(data_ + pos_, out.size(), out.begin());
    pos_ += out.size();
  }
  void skip(std::size_t n, const std::string& section) {
    need(n, section);
    pos_ += n;
  }

  [[noreturn]] void fail(const std::string& section, const std::string& what) const {
    if (index_file_) throw CorruptIndexError(section, what);
    throw InputError(section + ": " + what);
  }

 private:
  const std::uint8_t* data_;
  std::size_t size_;
  std::size_t pos_ = 0;
  bool index_file_;
};

std::uint32_t checked_u32(std::size_t v, const char* what) {
  if (v > 0xFFFFFFFFULL) throw ConfigError(std::string(what) + " exceeds 32 bits");
  return static_cast<std::uint32_t>(v);
}

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InputError("cannot write " + path);
  out << text;
  if (!out) throw InputError("write failed for " + path);
}

std::vector<std::string_view> split_lines(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    lines.push_back(line);
    if (end == text.size()) break;
    start = end + 1;
  }
  return lines;
}

std::vector<std::string_view> split_on(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t end = s.find(sep, start);
    out.push_back(s.substr(start, end == std::string_view::npos ? end : end - start));
    if (end == std::string_view::npos) break;
    start = end + 1;
  }
  return out;
}

std::vector<std::string_view> split_whitespace(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && (s[i] == ' ' || s[i] == '\t')) ++i;
    const std::size_t start = i;
    while (i < s.size() && s[i] != ' ' && s[i] != '\t') ++i;
    if (i > start) out.push_back(s.substr(start, i - start));
  }
  return out;
}

template <typename T>
bool parse_number(std::string_view s, T& out) {
  const char* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, out);
  return ec == std::errc() && ptr == end;
}

bool is_blank(std::string_view line) {
  return std::all_of(line.begin(), line.end(),
                     [](char c) { return c == ' ' || c == '\t'; });
}

std::string format_float(float v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

}  // namespace

std::uint32_t crc32_of(const std::uint8_t* data, std::size_t size) {
  uLong crc = ::crc32(0L, Z_NULL, 0);
  while (size > 0) {
    const auto chunk = static_cast<uInt>(std::min<std::size_t>(size, 1U << 30));
    crc = ::crc32(crc, data, chunk);
    data += chunk;
    size -= chunk;
  }
  return static_cast<std::uint32_t>(crc);
}

std::vector<std::uint8_t> read_file_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path);
  return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in), {});
}

void write_file_bytes(const std::string& path, const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InputError("cannot write " + path);
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw InputError("write failed for " + path);
}

void write_embeddings(const std::string& path, const Matrix& rows) {
  ByteWriter w;
  w.magic(kEmbeddingMagic);
  w.u32(kFormatVersion);
  w.u32(checked_u32(rows.rows(), "row count"));
  w.u32(checked_u32(rows.cols(), "dimension"));
  w.floats(rows.data());
  write_file_bytes(path, w.bytes());
}

Matrix read_embeddings(const std::string& path) {
  const std::vector<std::uint8_t> bytes = read_file_bytes(path);
  ByteReader r(bytes.data(), bytes.size(), false);
  if (!r.magic(kEmbeddingMagic, path)) r.fail(path, "bad magic, expected RCEM");
  const std::uint32_t version = r.u32(path);
  if (version != kFormatVersion) {
    r.fail(path, "unsupported version " + std::to_string(version));
  }
  const std::size_t rows = r.u32(path);
  const std::size_t dim = r.u32(path);
  if (r.remaining() != rows * dim * 4) {
    r.fail(path, "payload is " + std::to_string(r.remaining()) + " bytes, expected " +
                     std::to_string(rows * dim * 4));
  }
  Matrix out(rows, dim);
  r.floats(out.data(), path);
  return out;
}

std::vector<std::uint8_t> serialize_index(const IvfIndex& index) {
  const Codebook& cb = index.codebook();
  const std::size_t m = cb.num_blocks();
  ByteWriter w;
  w.magic(kIndexMagic);
  w.u32(kFormatVersion);
  w.u32(checked_u32(cb.dim(), "D"));
  w.u32(checked_u32(m, "M"));
  w.u32(checked_u32(cb.num_centroids(), "K"));
  w.u32(checked_u32(index.num_lists(), "n"));
  w.u32(checked_u32(index.doc_count(), "doc_count"));
  w.u8(index.rotation().enabled() ? 1 : 0);
  if (index.rotation().enabled()) w.floats(index.rotation().matrix().data());
  w.floats(cb.data());
  w.floats(index.coarse_centroids().data());
  for (const InvertedList& list : index.lists()) {
    w.u32(checked_u32(list.size(), "list length"));
    for (std::size_t e = 0; e < list.size(); ++e) {
      w.u32(list.ids[e]);
      w.raw(std::span<const std::uint8_t>(list.codes).subspan(e * m, m));
    }
  }
  std::vector<std::uint8_t>& bytes = w.bytes();
  const std::uint32_t crc = crc32_of(bytes.data(), bytes.size());
  w.u32(crc);
  return std::move(bytes);
}

namespace {

IndexHeader parse_header(ByteReader& r) {
  if (!r.magic(kIndexMagic, "header")) r.fail("header", "bad magic, expected RCIX");
  IndexHeader h;
  h.version = r.u32("header");
  if (h.version != kFormatVersion) {
    r.fail("header", "unsupported version " + std::to_string(h.version));
  }
  h.dim = r.u32("header");
  h.num_blocks = r.u32("header");
  h.num_centroids = r.u32("header");
  h.num_lists = r.u32("header");
  h.doc_count = r.u32("header");
  const std::uint8_t flag = r.u8("header");
  if (flag > 1) r.fail("header", "rotation flag " + std::to_string(flag));
  h.rotation = flag == 1;
  if (h.dim == 0 || h.num_blocks == 0 || h.dim % h.num_blocks != 0) {
    r.fail("header", "D=" + std::to_string(h.dim) + " and M=" +
                         std::to_string(h.num_blocks) + " are inconsistent");
  }
  if (h.num_centroids == 0 || h.num_centroids > kMaxCentroids) {
    r.fail("header", "K=" + std::to_string(h.num_centroids) + " out of range");
  }
  if (h.num_lists == 0 || h.doc_count == 0 || h.num_lists > h.doc_count) {
    r.fail("header", "n=" + std::to_string(h.num_lists) + ", doc_count=" +
                         std::to_string(h.doc_count) + " are inconsistent");
  }
  return h;
}

}  // namespace

IndexHeader read_index_header(const std::string& path) {
  const std::vector<std::uint8_t> bytes = read_file_bytes(path);
  ByteReader r(bytes.data(), bytes.size(), true);
  return parse_header(r);
}

IvfIndex deserialize_index(const std::vector<std::uint8_t>& bytes) {
  ByteReader r(bytes.data(), bytes.size(), true);
  const IndexHeader h = parse_header(r);
  const std::size_t dim = h.dim;
  const std::size_t m = h.num_blocks;
  const std::size_t k = h.num_centroids;
  const std::size_t entry = 4 + m;

  // Walk the section lengths before touching the payload so truncation and
  // trailing bytes name the section they belong to.
  const std::size_t sections_begin = r.position();
  if (h.rotation) r.skip(dim * dim * 4, "rotation");
  r.skip(m * k * (dim / m) * 4, "codebook");
  r.skip(static_cast<std::size_t>(h.num_lists) * dim * 4, "coarse_centroids");
  std::size_t total_entries = 0;
  for (std::size_t l = 0; l < h.num_lists; ++l) {
    const std::size_t len = r.u32("lists");
    total_entries += len;
    if (total_entries > h.doc_count) {
      r.fail("lists", "list lengths exceed doc_count " + std::to_string(h.doc_count));
    }
    r.skip(len * entry, "lists");
  }
  if (total_entries != h.doc_count) {
    r.fail("lists", "list lengths sum to " + std::to_string(total_entries) +
                        ", doc_count is " + std::to_string(h.doc_count));
  }
  const std::size_t payload_end = r.position();
  if (r.remaining() < 4) r.fail("checksum", "missing CRC-32 footer");
  if (r.remaining() > 4) {
    r.fail("checksum", std::to_string(r.remaining() - 4) + " trailing bytes");
  }
  const std::uint32_t stored = r.u32("checksum");
  const std::uint32_t actual = crc32_of(bytes.data(), payload_end);
  if (stored != actual) r.fail("checksum", "CRC-32 mismatch");

  ByteReader p(bytes.data() + sections_begin, payload_end - sections_begin, true);
  Rotation rotation = Rotation::none(dim);
  if (h.rotation) {
    Matrix rot(dim, dim);
    p.floats(rot.data(), "rotation");
    rotation = Rotation::from_matrix(std::move(rot));
  }
  std::vector<float> centroids(m * k * (dim / m));
  p.floats(centroids, "codebook");
  Codebook codebook(dim, m, k, std::move(centroids));
  Matrix coarse(h.num_lists, dim);
  p.floats(coarse.data(), "coarse_centroids");
  std::vector<InvertedList> lists(h.num_lists);
  for (InvertedList& list : lists) {
    const std::size_t len = p.u32("lists");
    list.ids.resize(len);
    list.codes.resize(len * m);
    for (std::size_t e = 0; e < len; ++e) {
      list.ids[e] = p.u32("lists");
      p.raw(std::span<std::uint8_t>(list.codes).subspan(e * m, m), "lists");
    }
  }
  return IvfIndex(std::move(codebook), std::move(rotation), std::move(coarse),
                  std::move(lists), h.doc_count);
}

void write_index(const IvfIndex& index, const std::string& path) {
  write_file_bytes(path, serialize_index(index));
}

IvfIndex read_index(const std::string& path) {
  return deserialize_index(read_file_bytes(path));
}

void write_codes(const std::string& path, const CodeTable& codes) {
  ByteWriter w;
  w.magic(kCodesMagic);
  w.u32(kFormatVersion);
  w.u32(checked_u32(codes.rows(), "row count"));
  w.u32(checked_u32(codes.num_blocks(), "M"));
  w.raw(codes.bytes());
  write_file_bytes(path, w.bytes());
}

CodeTable read_codes(const std::string& path) {
  const std::vector<std::uint8_t> bytes = read_file_bytes(path);
  ByteReader r(bytes.data(), bytes.size(), false);
  if (!r.magic(kCodesMagic, path)) r.fail(path, "bad magic, expected RCCD");
  const std::uint32_t version = r.u32(path);
  if (version != kFormatVersion) {
    r.fail(path, "unsupported version " + std::to_string(version));
  }
  const std::size_t rows = r.u32(path);
  const std::size_t m = r.u32(path);
  if (r.remaining() != rows * m) {
    r.fail(path, "payload is " + std::to_string(r.remaining()) + " bytes, expected " +
                     std::to_string(rows * m));
  }
  std::vector<std::uint8_t> data(rows * m);
  r.raw(data, path);
  return CodeTable(rows, m, std::move(data));
}

QuerySet parse_queries(const std::string& text, const std::string& source) {
  QuerySet out;
  std::vector<float> values;
  std::size_t dim = 0;
  const auto lines = split_lines(text);
  for (std::size_t n = 0; n < lines.size(); ++n) {
    const std::string_view line = lines[n];
    if (is_blank(line)) continue;
    const std::size_t tab = line.find('\t');
    if (tab == std::string_view::npos || tab == 0) {
      throw ParseError(source, n + 1, "expected 'qid<TAB>values'");
    }
    const auto fields = split_whitespace(line.substr(tab + 1));
    if (fields.empty()) throw ParseError(source, n + 1, "query has no values");
    if (out.ids.empty()) dim = fields.size();
    if (fields.size() != dim) {
      throw ParseError(source, n + 1, "query has " + std::to_string(fields.size()) +
                                          " values, expected " + std::to_string(dim));
    }
    for (std::string_view f : fields) {
      float v = 0.0F;
      if (!parse_number(f, v) || !std::isfinite(v)) {
        throw ParseError(source, n + 1, "bad value '" + std::string(f) + "'");
      }
      values.push_back(v);
    }
    out.ids.emplace_back(line.substr(0, tab));
  }
  out.vectors = Matrix(out.ids.size(), dim, std::move(values));
  return out;
}

QuerySet read_queries(const std::string& path) { return parse_queries(read_text(path), path); }

void write_queries(const std::string& path, const QuerySet& queries) {
  std::string text;
  for (std::size_t q = 0; q < queries.size(); ++q) {
    text += queries.ids[q];
    text += '\t';
    auto row = queries.vectors.row(q);
    for (std::size_t d = 0; d < row.size(); ++d) {
      if (d > 0) text += ' ';
      text += format_float(row[d]);
    }
    text += '\n';
  }
  write_text(path, text);
}

Qrels parse_qrels(const std::string& text, const std::string& source) {
  Qrels out;
  const auto lines = split_lines(text);
  for (std::size_t n = 0; n < lines.size(); ++n) {
    if (is_blank(lines[n])) continue;
    const auto fields = split_on(lines[n], '\t');
    if (fields.size() != 3 || fields[0].empty()) {
      throw ParseError(source, n + 1, "expected 'qid<TAB>docid<TAB>grade'");
    }
    std::uint32_t doc = 0;
    int grade = 0;
    if (!parse_number(fields[1], doc)) {
      throw ParseError(source, n + 1, "bad doc id '" + std::string(fields[1]) + "'");
    }
    if (!parse_number(fields[2], grade)) {
      throw ParseError(source, n + 1, "bad grade '" + std::string(fields[2]) + "'");
    }
    auto& judged = out[std::string(fields[0])];
    auto [it, inserted] = judged.emplace(doc, grade);
    if (!inserted) it->second = std::max(it->second, grade);
  }
  return out;
}

Qrels read_qrels(const std::string& path) { return parse_qrels(read_text(path), path); }

void write_qrels(const std::string& path, const Qrels& qrels) {
  std::string text;
  for (const auto& [qid, judged] : qrels) {
    for (const auto& [doc, grade] : judged) {
      text += qid + '\t' + std::to_string(doc) + '\t' + std::to_string(grade) + '\n';
    }
  }
  write_text(path, text);
}

Rankings parse_run(const std::string& text, const std::string& source) {
  std::map<std::string, std::vector<std::pair<std::uint32_t, std::uint32_t>>> ranked;
  const auto lines = split_lines(text);
  for (std::size_t n = 0; n < lines.size(); ++n) {
    if (is_blank(lines[n])) continue;
    const auto fields = split_whitespace(lines[n]);
    if (fields.size() != 4) {
      throw ParseError(source, n + 1, "expected 'qid docid rank score'");
    }
    std::uint32_t doc = 0;
    std::uint32_t rank = 0;
    double score = 0.0;
    if (!parse_number(fields[1], doc) || !parse_number(fields[2], rank) || rank == 0 ||
        !parse_number(fields[3], score)) {
      throw ParseError(source, n + 1, "malformed run line");
    }
    ranked[std::string(fields[0])].emplace_back(rank, doc);
  }
  Rankings out;
  for (auto& [qid, entries] : ranked) {
    std::stable_sort(entries.begin(), entries.end(),
                     [](const auto& a, const auto& b) { return a.first < b.first; });
    auto& docs = out[qid];
    for (const auto& e : entries) docs.push_back(e.second);
  }
  return out;
}

Rankings read_run(const std::string& path) { return parse_run(read_text(path), path); }

}  // namespace repconc
