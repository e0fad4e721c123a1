#pragma once

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>

#ifndef ECC_SOURCE_DIR
#define ECC_SOURCE_DIR "."
#endif

namespace ecc::test {

inline std::filesystem::path source_path(const std::string& rel) { return std::filesystem::path(ECC_SOURCE_DIR) / rel; }

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    TempDir() {
        std::string tmpl = (std::filesystem::temp_directory_path() / "ecc-test-XXXXXX").string();
        if (!mkdtemp(tmpl.data())) throw std::runtime_error("mkdtemp failed");
        path_ = tmpl;
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

inline void write_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out << text;
}

inline std::string encode_utf8(char32_t cp) {
    std::string out;
    if (cp < 0x80) {
        out.push_back(static_cast<char>(cp));
    } else if (cp < 0x800) {
        out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else if (cp < 0x10000) {
        out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else {
        out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    }
    return out;
}

/// Random text mixing ASCII, whitespace and control characters, combining
/// marks, Hangul jamo, CJK, emoji and the odd invalid byte.
inline std::string random_unicode(std::mt19937_64& rng, std::size_t max_len = 40) {
    static const char32_t kPool[] = {
        U'a', U'b', U'Z', U'0', U'?', U' ', U'\t', U'\n', U'\r', 0x0B, 0x0C, 0x00, 0x07, 0x1B, 0x7F, 0x85,
        0xA0, 0x1680, 0x2003, 0x2028, 0x2029, 0x202F, 0x3000, 0xFEFF, 0x200B, 0x0301, 0x0308, 0x0327,
        0x1100, 0x1161, 0x11A8, 0xAC00, 0x00E9, 0x00C5, 0x212B, 0x4F60, 0x597D, 0xFF0C, 0x1F44D, 0x1F600,
        0x0627, 0x05D0, 0x0915, 0x094D, 0x1E9B, 0x0323};
    std::uniform_int_distribution<std::size_t> len_dist(0, max_len);
    std::uniform_int_distribution<std::size_t> pick(0, std::size(kPool) - 1);
    std::uniform_int_distribution<int> coin(0, 49);
    std::string out;
    const std::size_t len = len_dist(rng);
    for (std::size_t i = 0; i < len; ++i) {
        if (coin(rng) == 0) {
            out.push_back(static_cast<char>(0x80 | (rng() & 0x3F)));  // stray continuation byte
        } else {
            out += encode_utf8(kPool[pick(rng)]);
        }
    }
    return out;
}

}  // namespace ecc::test
