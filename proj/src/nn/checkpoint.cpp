#include "vloc/nn/checkpoint.hpp"

#include <bit>
#include <cstring>

#include "vloc/common/io.hpp"

namespace vloc::nn {

using ojson = nlohmann::ordered_json;

namespace {

template <typename U>
void put_le(std::string& out, U v) {
    for (std::size_t i = 0; i < sizeof(U); ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

template <typename U>
U get_le(std::string_view in, std::size_t at) {
    U v = 0;
    for (std::size_t i = 0; i < sizeof(U); ++i)
        v |= static_cast<U>(static_cast<unsigned char>(in[at + i])) << (8 * i);
    return v;
}

} // namespace

std::string encode_checkpoint(const Checkpoint& ck) {
    ojson index = ojson::object();
    std::uint64_t offset = 0;
    for (const auto& [name, t] : ck.tensors) {
        const std::uint64_t len = static_cast<std::uint64_t>(t.size()) * 4;
        index[name] = {{"shape", {t.rows(), t.cols()}}, {"offset", offset}, {"length", len}};
        offset += len;
    }
    ojson header = {{"v", kCheckpointVersion},
                    {"model_kind", ck.model_kind},
                    {"config", ck.config},
                    {"tensors", index},
                    {"provenance", ck.provenance}};
    const std::string h = header.dump();

    std::string out(kCheckpointMagic);
    put_le<std::uint32_t>(out, kCheckpointVersion);
    put_le<std::uint64_t>(out, h.size());
    out += h;
    out.reserve(out.size() + offset);
    for (const auto& [name, t] : ck.tensors)
        for (Eigen::Index i = 0; i < t.size(); ++i) put_le<std::uint32_t>(out, std::bit_cast<std::uint32_t>(t.data()[i]));
    return out;
}

Checkpoint decode_checkpoint(std::string_view bytes, const std::string& origin) {
    auto fail = [&](const std::string& why) { return BadCheckpoint(origin + ": " + why); };
    constexpr std::size_t fixed = 8 + 4 + 8;
    if (bytes.size() < fixed || bytes.substr(0, 8) != kCheckpointMagic) throw fail("not a checkpoint (bad magic)");
    const auto version = get_le<std::uint32_t>(bytes, 8);
    if (version != kCheckpointVersion) throw fail("unsupported version " + std::to_string(version));
    const auto hlen = get_le<std::uint64_t>(bytes, 12);
    if (hlen > bytes.size() - fixed) throw fail("truncated header");
    ojson header;
    try {
        header = ojson::parse(bytes.substr(fixed, hlen));
    } catch (const nlohmann::json::exception& e) {
        throw fail(std::string("header is not JSON: ") + e.what());
    }
    const std::string_view payload = bytes.substr(fixed + hlen);

    Checkpoint ck;
    try {
        ck.model_kind = header.at("model_kind").get<std::string>();
        ck.config = header.at("config");
        ck.provenance = header.at("provenance");
        for (const auto& [name, entry] : header.at("tensors").items()) {
            const auto rows = entry.at("shape").at(0).get<Eigen::Index>();
            const auto cols = entry.at("shape").at(1).get<Eigen::Index>();
            const auto off = entry.at("offset").get<std::uint64_t>();
            const auto len = entry.at("length").get<std::uint64_t>();
            if (rows < 0 || cols < 0 || len != static_cast<std::uint64_t>(rows * cols) * 4)
                throw fail("tensor '" + name + "' shape and length disagree");
            if (off > payload.size() || len > payload.size() - off) throw fail("tensor '" + name + "' is truncated");
            Tensor<float> t(rows, cols);
            for (Eigen::Index i = 0; i < t.size(); ++i)
                t.data()[i] = std::bit_cast<float>(get_le<std::uint32_t>(payload, off + 4 * static_cast<std::size_t>(i)));
            ck.tensors.add(name, std::move(t));
        }
    } catch (const nlohmann::json::exception& e) {
        throw fail(std::string("malformed header: ") + e.what());
    }
    return ck;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ck) {
    write_file_atomic(path, encode_checkpoint(ck));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    return decode_checkpoint(read_file(path), path.string());
}

} // namespace vloc::nn
