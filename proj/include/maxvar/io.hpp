#pragma once

// GridSet / ScalarField files: a JSON header with the geometry and a run-length
// payload (varint run lengths, base64). Writes go through a temp file + rename.

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <unistd.h>
#include <variant>
#include <vector>

#include <boost/beast/core/detail/base64.hpp>

#include "error.hpp"
#include "grid.hpp"
#include "report.hpp"

namespace maxvar {

inline constexpr int kFileVersion = 1;
inline constexpr const char* kEncoding = "rle-varint-base64";

namespace detail {

inline void put_varint(std::string& out, std::uint64_t v)
{
    while (v >= 0x80) {
        out.push_back(static_cast<char>((v & 0x7f) | 0x80));
        v >>= 7;
    }
    out.push_back(static_cast<char>(v));
}

inline std::uint64_t get_varint(const std::string& in, std::size_t& pos)
{
    std::uint64_t v = 0;
    for (int shift = 0; shift < 64; shift += 7) {
        if (pos >= in.size()) throw FormatError("truncated payload");
        const auto b = static_cast<std::uint8_t>(in[pos++]);
        v |= static_cast<std::uint64_t>(b & 0x7f) << shift;
        if (!(b & 0x80)) return v;
    }
    throw FormatError("varint too long");
}

inline std::string base64_encode(const std::string& raw)
{
    namespace b64 = boost::beast::detail::base64;
    std::string out(b64::encoded_size(raw.size()), '\0');
    out.resize(b64::encode(out.data(), raw.data(), raw.size()));
    return out;
}

inline std::string base64_decode(const std::string& text)
{
    namespace b64 = boost::beast::detail::base64;
    const auto body = text.find_last_not_of('=') + 1;
    if (text.size() % 4 != 0 || text.size() - body > 2) throw FormatError("payload is not base64");
    std::string out(b64::decoded_size(text.size()), '\0');
    const auto [written, read] = b64::decode(out.data(), text.data(), body);
    if (read != body) throw FormatError("payload is not base64");
    out.resize(written);
    return out;
}

inline Json geometry_json(const GridGeometry& g)
{
    Json shape = Json::array(), origin = Json::array();
    for (int a = 0; a < g.d; ++a) {
        shape.push_back(g.shape[a]);
        origin.push_back(g.origin[a]);
    }
    return {{"d", g.d}, {"shape", shape}, {"h", g.h}, {"origin", origin}};
}

inline GridGeometry geometry_from_json(const Json& j)
{
    try {
        GridGeometry g;
        g.d = j.at("d").get<int>();
        if (g.d < 1 || g.d > kMaxGridDim) throw FormatError("d must be 1, 2 or 3");
        const auto& shape = j.at("shape");
        const auto& origin = j.at("origin");
        if (!shape.is_array() || !origin.is_array() || shape.size() != static_cast<std::size_t>(g.d) ||
            origin.size() != static_cast<std::size_t>(g.d))
            throw FormatError("shape and origin need d entries");
        for (int a = 0; a < g.d; ++a) {
            g.shape[a] = shape[a].get<Index>();
            g.origin[a] = origin[a].get<double>();
        }
        g.h = j.at("h").get<double>();
        g.validate();
        return g;
    } catch (const InvalidArgument& e) {
        throw FormatError(std::string("bad geometry: ") + e.what());
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("bad header: ") + e.what());
    }
}

inline Json header(const char* type, const GridGeometry& g)
{
    Json j;
    j["version"] = kFileVersion;
    j["type"] = type;
    const Json geo = geometry_json(g);
    for (const auto& [k, v] : geo.items()) j[k] = v;
    j["encoding"] = kEncoding;
    return j;
}

} // namespace detail

/// Alternating runs starting with a run of 0 cells (possibly empty).
inline Json to_json(const GridSet& s)
{
    std::string raw;
    const auto data = s.data();
    std::uint8_t cur = 0;
    std::uint64_t run = 0;
    for (auto v : data) {
        if (v != cur) {
            detail::put_varint(raw, run);
            cur = v;
            run = 0;
        }
        ++run;
    }
    detail::put_varint(raw, run);
    Json j = detail::header("GridSet", s.geometry());
    j["count"] = s.count();
    j["payload"] = detail::base64_encode(raw);
    return j;
}

/// Runs of bit-identical values: varint length then the 8 little-endian bytes.
inline Json to_json(const ScalarField& f)
{
    std::string raw;
    const auto vals = f.values();
    auto bits = [](double v) { return std::bit_cast<std::uint64_t>(v); };
    for (std::size_t i = 0; i < vals.size();) {
        std::size_t j = i + 1;
        while (j < vals.size() && bits(vals[j]) == bits(vals[i])) ++j;
        detail::put_varint(raw, j - i);
        const std::uint64_t b = bits(vals[i]);
        for (int k = 0; k < 8; ++k) raw.push_back(static_cast<char>((b >> (8 * k)) & 0xff));
        i = j;
    }
    Json j = detail::header("ScalarField", f.geometry());
    j["payload"] = detail::base64_encode(raw);
    return j;
}

namespace detail {

inline std::string payload_of(const Json& j, const char* type)
{
    try {
        if (j.at("version").get<int>() != kFileVersion) throw FormatError("unsupported file version");
        if (j.at("type").get<std::string>() != type) throw FormatError(std::string("expected a ") + type + " file");
        if (j.at("encoding").get<std::string>() != kEncoding) throw FormatError("unknown encoding");
        return base64_decode(j.at("payload").get<std::string>());
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("bad header: ") + e.what());
    }
}

} // namespace detail

inline GridSet grid_set_from_json(const Json& j)
{
    const auto g = detail::geometry_from_json(j);
    const std::string raw = detail::payload_of(j, "GridSet");
    GridSet s(g);
    std::size_t pos = 0;
    Index i = 0;
    bool cur = false;
    while (pos < raw.size()) {
        const auto run = detail::get_varint(raw, pos);
        if (run > static_cast<std::uint64_t>(g.size() - i)) throw FormatError("runs exceed the grid size");
        for (std::uint64_t k = 0; k < run; ++k) s.set(i++, cur);
        cur = !cur;
    }
    if (i != g.size()) throw FormatError("runs do not cover the grid");
    return s;
}

inline ScalarField scalar_field_from_json(const Json& j)
{
    const auto g = detail::geometry_from_json(j);
    const std::string raw = detail::payload_of(j, "ScalarField");
    std::vector<double> vals;
    vals.reserve(static_cast<std::size_t>(g.size()));
    std::size_t pos = 0;
    while (pos < raw.size()) {
        const auto run = detail::get_varint(raw, pos);
        if (run == 0 || run > static_cast<std::uint64_t>(g.size()) - vals.size())
            throw FormatError("runs exceed the grid size");
        if (pos + 8 > raw.size()) throw FormatError("truncated payload");
        std::uint64_t b = 0;
        for (int k = 0; k < 8; ++k) b |= static_cast<std::uint64_t>(static_cast<std::uint8_t>(raw[pos + k])) << (8 * k);
        pos += 8;
        vals.insert(vals.end(), run, std::bit_cast<double>(b));
    }
    if (static_cast<Index>(vals.size()) != g.size()) throw FormatError("runs do not cover the grid");
    return ScalarField(g, std::move(vals));
}

// ---------------------------------------------------------------------------

/// Writes `text` to a sibling temp file and renames it over `path`.
inline void write_atomic(const std::filesystem::path& path, const std::string& text)
{
    auto tmp = path;
    tmp += ".tmp." + std::to_string(::getpid());
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error("cannot write " + tmp.string());
        out << text;
        out.flush();
        if (!out) {
            std::filesystem::remove(tmp);
            throw Error("cannot write " + tmp.string());
        }
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::filesystem::remove(tmp);
        throw Error("cannot rename onto " + path.string() + ": " + ec.message());
    }
}

inline std::string read_text(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot read " + path.string());
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

inline Json read_json(const std::filesystem::path& path)
{
    try {
        return Json::parse(read_text(path));
    } catch (const nlohmann::json::parse_error& e) {
        throw FormatError(path.string() + ": " + e.what());
    }
}

inline void write_json(const std::filesystem::path& path, const Json& j) { write_atomic(path, j.dump(1) + "\n"); }

inline void save(const std::filesystem::path& path, const GridSet& s) { write_json(path, to_json(s)); }
inline void save(const std::filesystem::path& path, const ScalarField& f) { write_json(path, to_json(f)); }

using GridData = std::variant<GridSet, ScalarField>;

/// Loads either kind of grid file, by its "type" field.
inline GridData load(const std::filesystem::path& path)
{
    const Json j = read_json(path);
    if (!j.is_object() || !j.contains("type") || !j["type"].is_string()) throw FormatError(path.string() + ": no type");
    const auto type = j["type"].get<std::string>();
    if (type == "GridSet") return grid_set_from_json(j);
    if (type == "ScalarField") return scalar_field_from_json(j);
    throw FormatError(path.string() + ": unknown type '" + type + "'");
}

inline GridSet load_grid_set(const std::filesystem::path& path) { return grid_set_from_json(read_json(path)); }
inline ScalarField load_scalar_field(const std::filesystem::path& path) { return scalar_field_from_json(read_json(path)); }

} // namespace maxvar
