#pragma once

#include "rdx/core.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <optional>
#include <sstream>
#include <string_view>

namespace rdx {

// Reader/writer for NPY v1.0 / v2.0 files holding 2-D float32/float64
// arrays in C order. Layout:
//   "\x93NUMPY" | major | minor | header_len (u16 LE for v1, u32 LE for v2)
//   | ASCII dict literal padded with spaces and ended by '\n' | raw payload

enum class NpyDtype { f4, f8 };

struct NpyArray {
  Matrix data;
  NpyDtype dtype = NpyDtype::f8;
};

namespace detail {

/// Cursor over the header dict literal. Offsets are absolute file offsets.
class NpyHeaderParser {
public:
  NpyHeaderParser(std::string_view text, std::uint64_t base) : text_(text), base_(base) {}

  std::string descr;
  std::optional<bool> fortran_order;
  std::optional<std::vector<std::int64_t>> shape;

  void parse() {
    skip_ws();
    expect('{');
    while (true) {
      skip_ws();
      if (peek() == '}') {
        ++pos_;
        break;
      }
      const std::string key = parse_string();
      skip_ws();
      expect(':');
      skip_ws();
      if (key == "descr") {
        descr = parse_string();
      } else if (key == "fortran_order") {
        fortran_order = parse_bool();
      } else if (key == "shape") {
        shape = parse_tuple();
      } else {
        fail("unexpected header key '" + key + "'");
      }
      skip_ws();
      if (peek() == ',') {
        ++pos_;
        continue;
      }
      skip_ws();
      expect('}');
      break;
    }
    skip_ws();
    if (pos_ != text_.size()) fail("trailing characters after header dict");
    if (descr.empty()) fail("header lacks 'descr'");
    if (!fortran_order) fail("header lacks 'fortran_order'");
    if (!shape) fail("header lacks 'shape'");
  }

  std::uint64_t offset() const { return base_ + pos_; }

  [[noreturn]] void fail(const std::string& what) const {
    throw FormatError("NPY header: " + what, offset());
  }

private:
  char peek() const { return pos_ < text_.size() ? text_[pos_] : '\0'; }

  void skip_ws() {
    while (pos_ < text_.size() && (text_[pos_] == ' ' || text_[pos_] == '\t' || text_[pos_] == '\n')) ++pos_;
  }

  void expect(char c) {
    if (peek() != c) fail(std::string("expected '") + c + "'");
    ++pos_;
  }

  std::string parse_string() {
    const char q = peek();
    if (q != '\'' && q != '"') fail("expected a quoted string");
    ++pos_;
    const auto end = text_.find(q, pos_);
    if (end == std::string_view::npos) fail("unterminated string");
    std::string s(text_.substr(pos_, end - pos_));
    pos_ = end + 1;
    return s;
  }

  bool parse_bool() {
    if (text_.substr(pos_, 4) == "True") {
      pos_ += 4;
      return true;
    }
    if (text_.substr(pos_, 5) == "False") {
      pos_ += 5;
      return false;
    }
    fail("expected True or False");
  }

  std::vector<std::int64_t> parse_tuple() {
    expect('(');
    std::vector<std::int64_t> dims;
    while (true) {
      skip_ws();
      if (peek() == ')') {
        ++pos_;
        return dims;
      }
      if (peek() < '0' || peek() > '9') fail("expected a dimension");
      std::int64_t v = 0;
      while (peek() >= '0' && peek() <= '9') {
        v = v * 10 + (peek() - '0');
        if (v > (std::int64_t{1} << 40)) fail("dimension too large");
        ++pos_;
      }
      // Python long suffix from very old writers.
      if (peek() == 'L') ++pos_;
      dims.push_back(v);
      skip_ws();
      if (peek() == ',') {
        ++pos_;
      } else if (peek() != ')') {
        fail("expected ',' or ')' in shape");
      }
    }
  }

  std::string_view text_;
  std::uint64_t base_;
  std::size_t pos_ = 0;
};

template <typename T>
T load_scalar(const unsigned char* p, bool little) {
  using U = std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint64_t>;
  U bits = 0;
  for (std::size_t b = 0; b < sizeof(T); ++b) {
    const std::size_t shift = little ? b : sizeof(T) - 1 - b;
    bits |= static_cast<U>(p[b]) << (8 * shift);
  }
  return std::bit_cast<T>(bits);
}

template <typename T>
void store_le(std::string& out, T value) {
  using U = std::conditional_t<sizeof(T) == 2, std::uint16_t,
                               std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint64_t>>;
  const U bits = std::bit_cast<U>(value);
  for (std::size_t b = 0; b < sizeof(T); ++b) out.push_back(static_cast<char>((bits >> (8 * b)) & 0xFF));
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw IoError("error reading '" + path + "'");
  return ss.str();
}

inline void write_file(const std::string& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("error writing '" + path + "'");
}

}  // namespace detail

/// Parses an in-memory NPY image.
inline NpyArray parse_npy(std::string_view bytes) {
  static constexpr std::string_view kMagic("\x93NUMPY", 6);
  if (bytes.size() < 6 || bytes.substr(0, 6) != kMagic) {
    throw FormatError("not an NPY file: bad magic string", 0);
  }
  if (bytes.size() < 10) throw FormatError("truncated NPY preamble", bytes.size());
  const auto major = static_cast<unsigned char>(bytes[6]);
  const auto minor = static_cast<unsigned char>(bytes[7]);
  if ((major != 1 && major != 2) || minor != 0) {
    throw FormatError("unsupported NPY version " + std::to_string(major) + "." +
                          std::to_string(minor) + " (expected 1.0 or 2.0)",
                      6);
  }
  const auto* raw = reinterpret_cast<const unsigned char*>(bytes.data());
  std::uint64_t header_len = 0;
  std::uint64_t header_start = 0;
  if (major == 1) {
    header_len = raw[8] | (static_cast<std::uint64_t>(raw[9]) << 8);
    header_start = 10;
  } else {
    if (bytes.size() < 12) throw FormatError("truncated NPY preamble", bytes.size());
    header_len = static_cast<std::uint64_t>(raw[8]) | (static_cast<std::uint64_t>(raw[9]) << 8) |
                 (static_cast<std::uint64_t>(raw[10]) << 16) |
                 (static_cast<std::uint64_t>(raw[11]) << 24);
    header_start = 12;
  }
  if (header_start + header_len > bytes.size()) {
    throw FormatError("header length " + std::to_string(header_len) + " runs past end of file",
                      8);
  }
  const std::string_view header = bytes.substr(header_start, header_len);
  if (header.empty() || header.back() != '\n') {
    throw FormatError("NPY header must end with a newline", header_start);
  }
  detail::NpyHeaderParser parser(header, header_start);
  parser.parse();

  NpyArray out;
  const std::string& descr = parser.descr;
  if (descr.size() != 3 || (descr[0] != '<' && descr[0] != '>' && descr[0] != '=') ||
      descr[1] != 'f' || (descr[2] != '4' && descr[2] != '8')) {
    throw FormatError("unsupported dtype '" + descr + "' (expected <f4, <f8, >f4 or >f8)",
                      header_start);
  }
  const bool little = descr[0] == '<' || (descr[0] == '=' && std::endian::native == std::endian::little);
  out.dtype = descr[2] == '4' ? NpyDtype::f4 : NpyDtype::f8;
  if (*parser.fortran_order) {
    throw FormatError("fortran_order=True arrays are not supported (C order required)",
                      header_start);
  }
  const auto& shape = *parser.shape;
  if (shape.size() != 2) {
    throw FormatError("expected a 2-D array, got ndim=" + std::to_string(shape.size()),
                      header_start);
  }
  const std::uint64_t rows = static_cast<std::uint64_t>(shape[0]);
  const std::uint64_t cols = static_cast<std::uint64_t>(shape[1]);
  const std::uint64_t item = out.dtype == NpyDtype::f4 ? 4 : 8;
  const std::uint64_t data_start = header_start + header_len;
  if (cols != 0 && rows > bytes.size() / cols / item) {
    throw FormatError("shape (" + std::to_string(rows) + ", " + std::to_string(cols) +
                          ") exceeds the file size",
                      header_start);
  }
  const std::uint64_t need = rows * cols * item;
  const std::uint64_t have = bytes.size() - data_start;
  if (have < need) {
    throw FormatError("payload holds " + std::to_string(have) + " bytes, shape needs " +
                          std::to_string(need),
                      bytes.size());
  }
  if (have > need) throw FormatError("unexpected trailing bytes after payload", data_start + need);

  out.data.resize(static_cast<Index>(rows), static_cast<Index>(cols));
  const unsigned char* p = raw + data_start;
  for (std::uint64_t r = 0; r < rows; ++r) {
    for (std::uint64_t c = 0; c < cols; ++c, p += item) {
      out.data(static_cast<Index>(r), static_cast<Index>(c)) =
          out.dtype == NpyDtype::f4 ? static_cast<double>(detail::load_scalar<float>(p, little))
                                    : detail::load_scalar<double>(p, little);
    }
  }
  return out;
}

/// Serializes a matrix as NPY (v1.0, or v2.0 if the header needs it).
inline std::string serialize_npy(const Matrix& m, NpyDtype dtype = NpyDtype::f8) {
  std::string dict = std::string("{'descr': '") + (dtype == NpyDtype::f4 ? "<f4" : "<f8") +
                     "', 'fortran_order': False, 'shape': (" + std::to_string(m.rows()) + ", " +
                     std::to_string(m.cols()) + "), }";
  // Pad so the payload starts on a 64-byte boundary.
  auto build = [&](std::size_t preamble) {
    std::string h = dict;
    const std::size_t total = preamble + h.size() + 1;
    h.append((64 - total % 64) % 64, ' ');
    h.push_back('\n');
    return h;
  };
  std::string header = build(10);
  const bool v2 = header.size() > 0xFFFF;
  if (v2) header = build(12);

  std::string out("\x93NUMPY", 6);
  out.push_back(static_cast<char>(v2 ? 2 : 1));
  out.push_back('\0');
  if (v2) {
    detail::store_le(out, static_cast<std::uint32_t>(header.size()));
  } else {
    detail::store_le(out, static_cast<std::uint16_t>(header.size()));
  }
  out += header;
  out.reserve(out.size() + static_cast<std::size_t>(m.size()) * (dtype == NpyDtype::f4 ? 4 : 8));
  for (Index r = 0; r < m.rows(); ++r) {
    for (Index c = 0; c < m.cols(); ++c) {
      if (dtype == NpyDtype::f4) {
        detail::store_le(out, static_cast<float>(m(r, c)));
      } else {
        detail::store_le(out, m(r, c));
      }
    }
  }
  return out;
}

inline NpyArray read_npy(const std::string& path) { return parse_npy(detail::read_file(path)); }

inline void write_npy(const std::string& path, const Matrix& m, NpyDtype dtype = NpyDtype::f8) {
  detail::write_file(path, serialize_npy(m, dtype));
}

/// Newline-delimited item ids; a trailing newline and '\r' are tolerated.
inline std::vector<std::string> read_id_sidecar(const std::string& path) {
  std::istringstream in(detail::read_file(path));
  std::vector<std::string> ids;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    ids.push_back(line);
  }
  return ids;
}

inline void write_id_sidecar(const std::string& path, const std::vector<std::string>& ids) {
  std::string out;
  for (const auto& id : ids) {
    out += id;
    out.push_back('\n');
  }
  detail::write_file(path, out);
}

/// Loads an embedding matrix; ids come from `sidecar` when given, else
/// "0".."n-1".
inline EmbeddingMatrix read_embeddings(const std::string& path, const std::string& model_id,
                                       const std::optional<std::string>& sidecar = std::nullopt) {
  auto arr = read_npy(path);
  std::vector<std::string> ids;
  if (sidecar) {
    ids = read_id_sidecar(*sidecar);
    if (static_cast<Index>(ids.size()) != arr.data.rows()) {
      throw ValidationError("id sidecar '" + *sidecar + "' has " + std::to_string(ids.size()) +
                            " lines for " + std::to_string(arr.data.rows()) + " rows in '" +
                            path + "'");
    }
  } else {
    ids = default_item_ids(arr.data.rows());
  }
  EmbeddingMatrix emb{model_id, std::move(ids), std::move(arr.data)};
  emb.validate();
  return emb;
}

inline void write_embeddings(const std::string& path, const EmbeddingMatrix& emb,
                             NpyDtype dtype = NpyDtype::f8,
                             const std::optional<std::string>& sidecar = std::nullopt) {
  write_npy(path, emb.data, dtype);
  if (sidecar) write_id_sidecar(*sidecar, emb.items);
}

}  // namespace rdx
