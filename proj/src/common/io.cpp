#include "vloc/common/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "vloc/common/error.hpp"

namespace fs = std::filesystem;

namespace vloc {

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::vector<std::string> read_lines(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (!line.empty()) lines.push_back(std::move(line));
    }
    return lines;
}

AtomicFile::AtomicFile(fs::path target) : target_(std::move(target)) {
    tmp_ = target_;
    tmp_ += ".partial";
}

AtomicFile::~AtomicFile() {
    if (!committed_) {
        std::error_code ec;
        fs::remove(tmp_, ec);
    }
}

void AtomicFile::write(std::string_view bytes) { buffer_.append(bytes); }

void AtomicFile::commit() {
    if (target_.has_parent_path()) fs::create_directories(target_.parent_path());
    {
        std::ofstream out(tmp_, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot write " + tmp_.string());
        out.write(buffer_.data(), static_cast<std::streamsize>(buffer_.size()));
        if (!out) throw IoError("short write to " + tmp_.string());
    }
    fs::rename(tmp_, target_);
    committed_ = true;
}

void write_file_atomic(const fs::path& path, std::string_view bytes) {
    AtomicFile f(path);
    f.write(bytes);
    f.commit();
}

std::uint64_t fnv1a(std::string_view bytes, std::uint64_t seed) {
    std::uint64_t h = seed;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

} // namespace vloc
