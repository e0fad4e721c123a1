#pragma once

#include <filesystem>
#include <string_view>

namespace ecc {

/// Append-only file handle. append() returns once the bytes reached stable
/// storage (write + fdatasync).
class AppendFile {
public:
    explicit AppendFile(const std::filesystem::path& path);
    ~AppendFile();

    AppendFile(const AppendFile&) = delete;
    AppendFile& operator=(const AppendFile&) = delete;
    AppendFile(AppendFile&& other) noexcept;
    AppendFile& operator=(AppendFile&& other) noexcept;

    void append(std::string_view bytes);
    const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
    int fd_ = -1;
};

}  // namespace ecc
