#pragma once

// .bcv container:
//
//   offset 0   4 bytes   magic "BCV1"
//   offset 4   8 bytes   header_len, unsigned little-endian
//   offset 12  header_len bytes of UTF-8 JSON
//   then       nx*ny*nz voxels, little-endian, x fastest
//
// Header keys: dims [nx,ny,nz], spacing_mm [sx,sy,sz], z_positions_mm
// (optional), dtype, kind, rescale_slope, rescale_intercept, label_map
// {"code": "name"}, subject_id (optional).
//
// Valid kind/dtype pairs:
//
//   kind               dtype
//   ct                 i16
//   tissue_labels      u8
//   vertebra_labels    u8
//
// Any other pairing of known values is a format error.

#include <algorithm>
#include <array>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <istream>
#include <limits>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_set>
#include <variant>
#include <vector>

#include <json.hpp>

#include "bodycomp/core.hpp"
#include "bodycomp/error.hpp"

namespace bodycomp {

inline constexpr std::array<char, 4> kBcvMagic{'B', 'C', 'V', '1'};
inline constexpr std::size_t kBcvPreambleBytes = 12;

using AnyVolume = std::variant<VoxelVolume, LabelVolume>;

namespace detail {

static_assert(std::endian::native == std::endian::little || std::endian::native == std::endian::big);

template <typename T>
T byteswap_if_big(T v) {
  if constexpr (std::endian::native == std::endian::big && sizeof(T) > 1) {
    std::array<unsigned char, sizeof(T)> b;
    std::memcpy(b.data(), &v, sizeof(T));
    std::reverse(b.begin(), b.end());
    std::memcpy(&v, b.data(), sizeof(T));
  }
  return v;
}

inline std::string_view kind_name(LabelKind k) {
  return k == LabelKind::Tissue ? "tissue_labels" : "vertebra_labels";
}

inline nlohmann::json geometry_json(const Geometry& g, nlohmann::json& h) {
  h["dims"] = {g.dims[0], g.dims[1], g.dims[2]};
  h["spacing_mm"] = {g.spacing_mm[0], g.spacing_mm[1], g.spacing_mm[2]};
  if (g.has_z_positions()) h["z_positions_mm"] = g.z_positions_mm;
  return h;
}

inline std::string preamble(const std::string& header) {
  std::string out(kBcvMagic.begin(), kBcvMagic.end());
  const std::uint64_t len = byteswap_if_big(static_cast<std::uint64_t>(header.size()));
  out.append(reinterpret_cast<const char*>(&len), sizeof(len));
  out += header;
  return out;
}

[[noreturn]] inline void format_error(const std::string& what) { throw Error(ErrorCode::FormatError, what); }

template <typename T>
T header_field(const nlohmann::json& h, const char* key) {
  if (!h.contains(key)) format_error(std::string("header missing '") + key + "'");
  try {
    return h.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    format_error(std::string("header field '") + key + "' has the wrong type");
  }
}

inline std::uint64_t stream_size(std::istream& in) {
  const auto here = in.tellg();
  in.seekg(0, std::ios::end);
  const auto end = in.tellg();
  in.seekg(here);
  if (here < 0 || end < 0) throw Error(ErrorCode::IoError, "stream is not seekable");
  return static_cast<std::uint64_t>(end - here);
}

}  // namespace detail

/// Serialises a raw CT volume (HU volumes have no .bcv dtype).
inline void write_volume(const VoxelVolume& vol, std::ostream& out) {
  if (vol.unit_state() != UnitState::Raw) {
    throw Error(ErrorCode::InvalidArgument, "only raw (int16) CT volumes can be written");
  }
  vol.geometry().validate();
  nlohmann::json h;
  detail::geometry_json(vol.geometry(), h);
  h["dtype"] = "i16";
  h["kind"] = "ct";
  h["rescale_slope"] = vol.rescale_slope();
  h["rescale_intercept"] = vol.rescale_intercept();
  h["label_map"] = nlohmann::json::object();
  if (vol.subject_id()) h["subject_id"] = *vol.subject_id();
  out << detail::preamble(h.dump());

  constexpr std::size_t chunk = 1 << 16;
  std::vector<std::int16_t> buf;
  buf.reserve(chunk);
  const auto values = vol.values();
  for (std::size_t i = 0; i < values.size(); i += chunk) {
    const std::size_t n = std::min(chunk, values.size() - i);
    buf.resize(n);
    for (std::size_t j = 0; j < n; ++j) {
      buf[j] = detail::byteswap_if_big(static_cast<std::int16_t>(values[i + j]));
    }
    out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(n * sizeof(std::int16_t)));
  }
  if (!out) throw Error(ErrorCode::IoError, "write failed");
}

inline void write_volume(const LabelVolume& vol, std::ostream& out) {
  vol.geometry().validate();
  nlohmann::json h;
  detail::geometry_json(vol.geometry(), h);
  h["dtype"] = "u8";
  h["kind"] = detail::kind_name(vol.kind());
  h["rescale_slope"] = 1.0;
  h["rescale_intercept"] = 0.0;
  nlohmann::json labels = nlohmann::json::object();
  for (const auto& [code, name] : vol.label_map()) labels[std::to_string(code)] = name;
  h["label_map"] = labels;
  if (vol.subject_id()) h["subject_id"] = *vol.subject_id();
  out << detail::preamble(h.dump());
  const auto codes = vol.codes();
  out.write(reinterpret_cast<const char*>(codes.data()), static_cast<std::streamsize>(codes.size()));
  if (!out) throw Error(ErrorCode::IoError, "write failed");
}

template <typename Volume>
void write_volume(const Volume& vol, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot open '" + path.string() + "' for writing");
  write_volume(vol, out);
  out.close();
  if (!out) throw Error(ErrorCode::IoError, "failed writing '" + path.string() + "'");
}

inline void write_volume(const AnyVolume& vol, const std::filesystem::path& path) {
  std::visit([&](const auto& v) { write_volume(v, path); }, vol);
}

/// Parses a .bcv stream. Errors: BadMagic, TruncatedPayload, HeaderMismatch
/// (z positions or payload length disagree with dims), UnknownDtype,
/// UnknownKind, FormatError (bad JSON, missing fields, invalid kind/dtype
/// pairing or invariant violations).
inline AnyVolume read_volume(std::istream& in) {
  const std::uint64_t total = detail::stream_size(in);
  std::array<char, 4> magic{};
  if (total < magic.size() || !in.read(magic.data(), magic.size()) || magic != kBcvMagic) {
    throw Error(ErrorCode::BadMagic, "missing BCV1 magic");
  }
  std::uint64_t header_len = 0;
  if (total < kBcvPreambleBytes || !in.read(reinterpret_cast<char*>(&header_len), sizeof(header_len))) {
    throw Error(ErrorCode::TruncatedPayload, "file ends inside the preamble");
  }
  header_len = detail::byteswap_if_big(header_len);
  if (header_len > total - kBcvPreambleBytes) {
    throw Error(ErrorCode::TruncatedPayload, "file ends inside the header");
  }
  std::string header_text(header_len, '\0');
  in.read(header_text.data(), static_cast<std::streamsize>(header_len));

  nlohmann::json h;
  try {
    h = nlohmann::json::parse(header_text);
  } catch (const nlohmann::json::exception& e) {
    detail::format_error(std::string("header is not valid JSON: ") + e.what());
  }
  if (!h.is_object()) detail::format_error("header is not a JSON object");

  const auto dtype = detail::header_field<std::string>(h, "dtype");
  const auto kind = detail::header_field<std::string>(h, "kind");
  if (dtype != "i16" && dtype != "u8") throw Error(ErrorCode::UnknownDtype, "dtype '" + dtype + "'");
  if (kind != "ct" && kind != "tissue_labels" && kind != "vertebra_labels") {
    throw Error(ErrorCode::UnknownKind, "kind '" + kind + "'");
  }
  if ((kind == "ct") != (dtype == "i16")) {
    detail::format_error("kind '" + kind + "' cannot use dtype '" + dtype + "'");
  }

  Geometry g;
  const auto dims = detail::header_field<std::vector<std::int64_t>>(h, "dims");
  const auto spacing = detail::header_field<std::vector<double>>(h, "spacing_mm");
  if (dims.size() != 3 || spacing.size() != 3) detail::format_error("dims and spacing_mm need 3 entries");
  for (int i = 0; i < 3; ++i) {
    if (dims[i] < 1) detail::format_error("dims must be >= 1");
    g.dims[i] = static_cast<std::size_t>(dims[i]);
    g.spacing_mm[i] = spacing[i];
  }
  if (h.contains("z_positions_mm") && !h["z_positions_mm"].is_null()) {
    g.z_positions_mm = detail::header_field<std::vector<double>>(h, "z_positions_mm");
    if (g.z_positions_mm.size() != g.nz()) {
      throw Error(ErrorCode::HeaderMismatch, "z_positions_mm has " + std::to_string(g.z_positions_mm.size()) +
                                                 " entries for " + std::to_string(g.nz()) + " slices");
    }
  }
  try {
    g.validate();
  } catch (const Error& e) {
    detail::format_error(e.what());
  }

  std::optional<std::string> subject;
  if (h.contains("subject_id") && !h["subject_id"].is_null()) {
    subject = detail::header_field<std::string>(h, "subject_id");
  }

  const std::size_t voxel_bytes = dtype == "i16" ? 2 : 1;
  if (g.voxel_count() > std::numeric_limits<std::uint64_t>::max() / voxel_bytes) {
    detail::format_error("dims overflow");
  }
  const std::uint64_t expected = static_cast<std::uint64_t>(g.voxel_count()) * voxel_bytes;
  const std::uint64_t available = total - kBcvPreambleBytes - header_len;
  if (available < expected) {
    throw Error(ErrorCode::TruncatedPayload, "payload has " + std::to_string(available) + " bytes, dims need " +
                                                 std::to_string(expected));
  }
  if (available > expected) {
    throw Error(ErrorCode::HeaderMismatch, "payload has " + std::to_string(available - expected) +
                                               " bytes beyond what dims describe");
  }

  if (kind == "ct") {
    const double slope = h.contains("rescale_slope") ? detail::header_field<double>(h, "rescale_slope") : 1.0;
    const double intercept =
        h.contains("rescale_intercept") ? detail::header_field<double>(h, "rescale_intercept") : 0.0;
    std::vector<float> values(g.voxel_count());
    constexpr std::size_t chunk = 1 << 16;
    std::vector<std::int16_t> buf(chunk);
    for (std::size_t i = 0; i < values.size(); i += chunk) {
      const std::size_t n = std::min(chunk, values.size() - i);
      if (!in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(n * sizeof(std::int16_t)))) {
        throw Error(ErrorCode::IoError, "read failed");
      }
      for (std::size_t j = 0; j < n; ++j) values[i + j] = detail::byteswap_if_big(buf[j]);
    }
    try {
      VoxelVolume vol(std::move(g), std::move(values), UnitState::Raw, slope, intercept);
      vol.set_subject_id(subject);
      return vol;
    } catch (const Error& e) {
      detail::format_error(e.what());
    }
  }

  LabelMap labels;
  if (h.contains("label_map")) {
    const auto& lm = h["label_map"];
    if (!lm.is_object()) detail::format_error("label_map must be an object");
    for (const auto& [key, value] : lm.items()) {
      int code = -1;
      const auto [ptr, ec] = std::from_chars(key.data(), key.data() + key.size(), code);
      if (ec != std::errc() || ptr != key.data() + key.size() || code < 0 || code > 255 || !value.is_string()) {
        detail::format_error("label_map entry '" + key + "' is not code -> name");
      }
      labels[static_cast<std::uint8_t>(code)] = value.get<std::string>();
    }
  }
  std::vector<std::uint8_t> codes(g.voxel_count());
  if (!in.read(reinterpret_cast<char*>(codes.data()), static_cast<std::streamsize>(codes.size()))) {
    throw Error(ErrorCode::IoError, "read failed");
  }
  try {
    LabelVolume vol(std::move(g), std::move(codes), std::move(labels),
                    kind == "tissue_labels" ? LabelKind::Tissue : LabelKind::Vertebra);
    vol.set_subject_id(subject);
    return vol;
  } catch (const Error& e) {
    detail::format_error(e.what());
  }
}

inline AnyVolume read_volume(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open '" + path.string() + "'");
  return read_volume(in);
}

inline VoxelVolume read_ct_volume(const std::filesystem::path& path) {
  AnyVolume v = read_volume(path);
  if (auto* ct = std::get_if<VoxelVolume>(&v)) return std::move(*ct);
  throw Error(ErrorCode::FormatError, "'" + path.string() + "' holds labels, expected a CT volume");
}

inline LabelVolume read_label_volume(const std::filesystem::path& path, std::optional<LabelKind> expected = {}) {
  AnyVolume v = read_volume(path);
  auto* labels = std::get_if<LabelVolume>(&v);
  if (!labels) throw Error(ErrorCode::FormatError, "'" + path.string() + "' holds a CT volume, expected labels");
  if (expected && labels->kind() != *expected) {
    throw Error(ErrorCode::FormatError, "'" + path.string() + "' has kind " +
                                            std::string(detail::kind_name(labels->kind())) + ", expected " +
                                            std::string(detail::kind_name(*expected)));
  }
  return std::move(*labels);
}

/// In-memory encoding, identical to the on-disk bytes.
template <typename Volume>
std::string encode_volume(const Volume& vol) {
  std::ostringstream out(std::ios::binary);
  write_volume(vol, out);
  return std::move(out).str();
}

inline AnyVolume decode_volume(std::string bytes) {
  std::istringstream in(std::move(bytes), std::ios::binary);
  return read_volume(in);
}

// ---------------------------------------------------------------------------
// Cohort CSV
// ---------------------------------------------------------------------------

namespace detail {

inline std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(first, last - first + 1));
}

/// Splits one CSV line; double-quoted fields may contain commas and "".
inline std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(trim(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  fields.push_back(trim(cur));
  return fields;
}

inline double parse_real(const std::string& s, const std::string& what) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v)) {
    throw Error(ErrorCode::BadNumber, what + ": '" + s + "' is not a number");
  }
  return v;
}

}  // namespace detail

/// Reads `subject_id,age_years,sex,race,height_m` (column order free, extra
/// columns ignored). A blank height is recorded as absent.
inline std::vector<SubjectRecord> read_cohort_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorCode::MissingColumn, "cohort CSV is empty");
  if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
  const auto header = detail::split_csv_line(line);
  auto column = [&](std::string_view name) {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw Error(ErrorCode::MissingColumn, "cohort CSV lacks column '" + std::string(name) + "'");
    return static_cast<std::size_t>(it - header.begin());
  };
  const std::size_t c_id = column("subject_id"), c_age = column("age_years"), c_sex = column("sex"),
                    c_race = column("race"), c_height = column("height_m");
  const std::size_t width = std::max({c_id, c_age, c_sex, c_race, c_height}) + 1;

  std::vector<SubjectRecord> records;
  std::unordered_set<std::string> seen;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    auto fields = detail::split_csv_line(line);
    if (fields.size() < width) fields.resize(width);
    const std::string where = "line " + std::to_string(line_no);

    SubjectRecord r;
    r.subject_id = fields[c_id];
    if (r.subject_id.empty()) throw Error(ErrorCode::FormatError, where + ": empty subject_id");
    r.age_years = detail::parse_real(fields[c_age], where + " age_years");
    if (r.age_years < 0) throw Error(ErrorCode::BadNumber, where + ": negative age");
    r.sex = parse_sex(fields[c_sex]);
    r.race = fields[c_race];
    if (!fields[c_height].empty()) {
      r.height_m = detail::parse_real(fields[c_height], where + " height_m");
      if (!(*r.height_m > 0)) throw Error(ErrorCode::BadNumber, where + ": height must be positive");
    }
    if (!seen.insert(r.subject_id).second) {
      throw Error(ErrorCode::DuplicateSubject, where + ": subject '" + r.subject_id + "' repeated");
    }
    records.push_back(std::move(r));
  }
  return records;
}

inline std::vector<SubjectRecord> read_cohort_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open '" + path.string() + "'");
  return read_cohort_csv(in);
}

}  // namespace bodycomp
