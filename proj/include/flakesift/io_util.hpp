#pragma once

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <system_error>

#include "flakesift/error.hpp"

namespace flakesift {

// Shortest round-trip decimal form of a double. Used everywhere a double is
// written to an output file so reruns are byte-identical.
inline std::string format_double(double v) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw io_error("file-not-readable", "cannot open for reading: " + path.string());
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// Write via temp file + rename so interrupted runs never leave a truncated
// output behind.
inline void atomic_write(const std::filesystem::path& path, const std::string& content) {
    namespace fs = std::filesystem;
    const fs::path dir = path.parent_path().empty() ? fs::path(".") : path.parent_path();
    std::error_code ec;
    fs::create_directories(dir, ec);
    const fs::path tmp = dir / (path.filename().string() + ".tmp");
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) {
            throw io_error("file-not-writable", "cannot open for writing: " + tmp.string());
        }
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        if (!out) {
            throw io_error("write-failed", "short write: " + tmp.string());
        }
    }
    fs::rename(tmp, path, ec);
    if (ec) {
        throw io_error("rename-failed", "cannot rename " + tmp.string() + " to " + path.string() + ": " + ec.message());
    }
}

}  // namespace flakesift
