#include "tabmoe/json_io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "tabmoe/errors.hpp"

namespace tabmoe::jsonio {
namespace {

void append_escaped(std::string& out, const std::string& s) {
    out += '"';
    for (char c : s) {
        switch (c) {
        case '"': out += "\\\""; break;
        case '\\': out += "\\\\"; break;
        case '\n': out += "\\n"; break;
        case '\r': out += "\\r"; break;
        case '\t': out += "\\t"; break;
        default:
            if (static_cast<unsigned char>(c) < 0x20) {
                char buf[8];
                std::snprintf(buf, sizeof buf, "\\u%04x", c);
                out += buf;
            } else {
                out += c;
            }
        }
    }
    out += '"';
}

void append_double(std::string& out, double v) {
    if (!std::isfinite(v)) throw NumericError("cannot serialize non-finite number");
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    out += buf;
}

void write_value(std::string& out, const nlohmann::json& v, int indent, int depth) {
    const auto pad = [&](int d) {
        if (indent >= 0) {
            out += '\n';
            out.append(static_cast<std::size_t>(indent * d), ' ');
        }
    };
    switch (v.type()) {
    case nlohmann::json::value_t::null: out += "null"; break;
    case nlohmann::json::value_t::boolean: out += v.get<bool>() ? "true" : "false"; break;
    case nlohmann::json::value_t::number_integer:
        out += std::to_string(v.get<std::int64_t>());
        break;
    case nlohmann::json::value_t::number_unsigned:
        out += std::to_string(v.get<std::uint64_t>());
        break;
    case nlohmann::json::value_t::number_float: append_double(out, v.get<double>()); break;
    case nlohmann::json::value_t::string: append_escaped(out, v.get<std::string>()); break;
    case nlohmann::json::value_t::array: {
        out += '[';
        bool first = true;
        for (const auto& item : v) {
            if (!first) out += ',';
            first = false;
            pad(depth + 1);
            write_value(out, item, indent, depth + 1);
        }
        if (!v.empty()) pad(depth);
        out += ']';
        break;
    }
    case nlohmann::json::value_t::object: {
        out += '{';
        bool first = true;
        for (auto it = v.begin(); it != v.end(); ++it) {
            if (!first) out += ',';
            first = false;
            pad(depth + 1);
            append_escaped(out, it.key());
            out += indent >= 0 ? ": " : ":";
            write_value(out, it.value(), indent, depth + 1);
        }
        if (!v.empty()) pad(depth);
        out += '}';
        break;
    }
    default:
        throw NumericError("unsupported JSON value type");
    }
}

} // namespace

std::string dump(const nlohmann::json& value) {
    std::string out;
    write_value(out, value, -1, 0);
    return out;
}

std::string dump_pretty(const nlohmann::json& value) {
    std::string out;
    write_value(out, value, 2, 0);
    out += '\n';
    return out;
}

nlohmann::json read_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw MissingArtifactError("cannot open " + path.string());
    }
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError("invalid JSON in " + path.string() + ": " + e.what());
    }
}

void write_file_atomic(const std::filesystem::path& path, std::string_view content) {
    if (path.has_parent_path()) {
        std::filesystem::create_directories(path.parent_path());
    }
    const std::filesystem::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error("cannot write " + tmp.string());
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        if (!out) throw Error("short write to " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

} // namespace tabmoe::jsonio
