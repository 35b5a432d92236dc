#include "dvx/nn/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>

#include "dvx/core/error.hpp"

namespace dvx::nn {

namespace {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

constexpr char kMagic[4] = {'D', 'V', 'C', 'K'};
constexpr std::uint32_t kVersion = 1;

template <typename U>
void put(std::ostream& os, U v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <typename U>
U get(std::istream& is, const std::filesystem::path& path) {
    U v{};
    if (!is.read(reinterpret_cast<char*>(&v), sizeof v)) {
        fail(ErrorKind::Data, "truncated checkpoint " + path.string());
    }
    return v;
}

}  // namespace

void write_checkpoint(const std::filesystem::path& path, const std::vector<CheckpointEntry>& entries) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) {
        fail(ErrorKind::Data, "cannot write checkpoint " + path.string());
    }
    os.write(kMagic, 4);
    put<std::uint32_t>(os, kVersion);
    put<std::uint32_t>(os, static_cast<std::uint32_t>(entries.size()));
    for (const auto& e : entries) {
        if (e.name.size() > 0xffff || e.shape.size() > 0xff || shape_numel(e.shape) != e.data.size()) {
            fail(ErrorKind::Data, "cannot serialize checkpoint entry " + e.name);
        }
        put<std::uint16_t>(os, static_cast<std::uint16_t>(e.name.size()));
        os.write(e.name.data(), static_cast<std::streamsize>(e.name.size()));
        put<std::uint8_t>(os, static_cast<std::uint8_t>(e.shape.size()));
        for (const int d : e.shape) {
            put<std::uint32_t>(os, static_cast<std::uint32_t>(d));
        }
        os.write(reinterpret_cast<const char*>(e.data.data()), static_cast<std::streamsize>(e.data.size() * 4));
    }
    if (!os) {
        fail(ErrorKind::Data, "write failed for checkpoint " + path.string());
    }
}

std::vector<CheckpointEntry> read_checkpoint(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) {
        fail(ErrorKind::Data, "cannot open checkpoint " + path.string());
    }
    char magic[4];
    if (!is.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0) {
        fail(ErrorKind::Data, "not a DVCK checkpoint: " + path.string());
    }
    const auto version = get<std::uint32_t>(is, path);
    if (version != kVersion) {
        fail(ErrorKind::Data, "unsupported checkpoint version " + std::to_string(version));
    }
    const auto count = get<std::uint32_t>(is, path);
    std::vector<CheckpointEntry> out;
    for (std::uint32_t k = 0; k < count; ++k) {
        CheckpointEntry e;
        e.name.resize(get<std::uint16_t>(is, path));
        if (!is.read(e.name.data(), static_cast<std::streamsize>(e.name.size()))) {
            fail(ErrorKind::Data, "truncated checkpoint " + path.string());
        }
        const auto rank = get<std::uint8_t>(is, path);
        for (int r = 0; r < rank; ++r) {
            e.shape.push_back(static_cast<int>(get<std::uint32_t>(is, path)));
        }
        e.data.resize(shape_numel(e.shape));
        if (!is.read(reinterpret_cast<char*>(e.data.data()), static_cast<std::streamsize>(e.data.size() * 4))) {
            fail(ErrorKind::Data, "truncated checkpoint " + path.string());
        }
        out.push_back(std::move(e));
    }
    if (is.peek() != std::char_traits<char>::eof()) {
        fail(ErrorKind::Data, "trailing bytes in checkpoint " + path.string());
    }
    return out;
}

template <typename T>
std::vector<CheckpointEntry> to_entries(const ParamStore<T>& params) {
    std::vector<CheckpointEntry> out;
    for (const auto& p : params.params()) {
        CheckpointEntry e{p.name, p.tensor.shape(), {}};
        e.data.reserve(p.tensor.numel());
        for (const T x : p.tensor.data()) {
            e.data.push_back(static_cast<float>(x));
        }
        out.push_back(std::move(e));
    }
    return out;
}

template <typename T>
void load_entries(ParamStore<T>& params, const std::vector<CheckpointEntry>& entries) {
    if (entries.size() != params.size()) {
        fail(ErrorKind::Data, "checkpoint has " + std::to_string(entries.size()) + " entries, model expects " +
                                  std::to_string(params.size()));
    }
    for (auto& p : params.params()) {
        const CheckpointEntry* found = nullptr;
        for (const auto& e : entries) {
            if (e.name == p.name) {
                found = &e;
                break;
            }
        }
        if (!found) {
            fail(ErrorKind::Data, "checkpoint lacks parameter " + p.name);
        }
        if (found->shape != p.tensor.shape()) {
            fail(ErrorKind::Data, "checkpoint shape " + shape_str(found->shape) + " for " + p.name + ", expected " +
                                      shape_str(p.tensor.shape()));
        }
        auto dst = p.tensor.mutable_data();
        for (std::size_t k = 0; k < dst.size(); ++k) {
            dst[k] = static_cast<T>(found->data[k]);
        }
    }
}

template std::vector<CheckpointEntry> to_entries<float>(const ParamStore<float>&);
template std::vector<CheckpointEntry> to_entries<double>(const ParamStore<double>&);
template void load_entries<float>(ParamStore<float>&, const std::vector<CheckpointEntry>&);
template void load_entries<double>(ParamStore<double>&, const std::vector<CheckpointEntry>&);

}  // namespace dvx::nn
