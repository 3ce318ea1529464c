#include <array>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <vector>

#include "mtcn/model.hpp"

namespace mtcn {

namespace {

constexpr char kMagic[4] = {'M', 'T', 'C', 'N'};
constexpr std::uint16_t kFormatVersion = 1;

// CRC-32 (IEEE 802.3, reflected, poly 0xEDB88320).
std::uint32_t crc32(const std::uint8_t* data, std::size_t len) {
    static const auto table = [] {
        std::array<std::uint32_t, 256> t{};
        for (std::uint32_t i = 0; i < 256; ++i) {
            std::uint32_t c = i;
            for (int k = 0; k < 8; ++k)
                c = (c & 1) ? 0xEDB88320u ^ (c >> 1) : c >> 1;
            t[i] = c;
        }
        return t;
    }();
    std::uint32_t crc = 0xFFFFFFFFu;
    for (std::size_t i = 0; i < len; ++i)
        crc = table[(crc ^ data[i]) & 0xFF] ^ (crc >> 8);
    return crc ^ 0xFFFFFFFFu;
}

void put_u16(std::vector<std::uint8_t>& buf, std::uint16_t v) {
    buf.push_back(static_cast<std::uint8_t>(v & 0xFF));
    buf.push_back(static_cast<std::uint8_t>(v >> 8));
}

void put_u32(std::vector<std::uint8_t>& buf, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) buf.push_back(static_cast<std::uint8_t>((v >> (8 * i)) & 0xFF));
}

void put_u64(std::vector<std::uint8_t>& buf, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) buf.push_back(static_cast<std::uint8_t>((v >> (8 * i)) & 0xFF));
}

void put_f32(std::vector<std::uint8_t>& buf, float v) {
    std::uint32_t bits;
    std::memcpy(&bits, &v, 4);
    put_u32(buf, bits);
}

void put_string(std::vector<std::uint8_t>& buf, const std::string& s) {
    put_u32(buf, static_cast<std::uint32_t>(s.size()));
    buf.insert(buf.end(), s.begin(), s.end());
}

void put_tensor(std::vector<std::uint8_t>& buf, const std::string& name, const Tensor& t) {
    put_string(buf, name);
    put_u32(buf, static_cast<std::uint32_t>(t.rank()));
    for (std::size_t d = 0; d < t.rank(); ++d) put_u64(buf, t.extent(d));
    for (std::size_t i = 0; i < t.size(); ++i) put_f32(buf, t[i]);
}

class Reader {
public:
    Reader(const std::uint8_t* data, std::size_t len) : data_(data), len_(len) {}

    std::uint16_t u16() { return static_cast<std::uint16_t>(u8() | (u8() << 8)); }
    std::uint32_t u32() {
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(u8()) << (8 * i);
        return v;
    }
    std::uint64_t u64() {
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(u8()) << (8 * i);
        return v;
    }
    float f32() {
        std::uint32_t bits = u32();
        float v;
        std::memcpy(&v, &bits, 4);
        return v;
    }
    std::string str() {
        std::uint32_t n = u32();
        need(n);
        std::string s(reinterpret_cast<const char*>(data_ + pos_), n);
        pos_ += n;
        return s;
    }
    std::size_t remaining() const { return len_ - pos_; }
    std::size_t pos() const { return pos_; }

private:
    std::uint8_t u8() {
        need(1);
        return data_[pos_++];
    }
    void need(std::size_t n) {
        if (pos_ + n > len_) throw IoError("model file truncated");
    }
    const std::uint8_t* data_;
    std::size_t len_;
    std::size_t pos_ = 0;
};

} // namespace

void save_model(const Model& model, const std::string& path) {
    std::vector<std::uint8_t> buf;
    buf.insert(buf.end(), kMagic, kMagic + 4);
    put_u16(buf, kFormatVersion);
    put_string(buf, encode_config(model.config));

    put_u32(buf, static_cast<std::uint32_t>(model.convs.size() * 2 + model.denses.size() * 2));
    for (std::size_t i = 0; i < model.convs.size(); ++i) {
        put_tensor(buf, "conv" + std::to_string(i) + ".kernel", model.convs[i].kernel);
        put_tensor(buf, "conv" + std::to_string(i) + ".bias", model.convs[i].bias);
    }
    for (std::size_t i = 0; i < model.denses.size(); ++i) {
        put_tensor(buf, "dense" + std::to_string(i) + ".weights", model.denses[i].weights);
        put_tensor(buf, "dense" + std::to_string(i) + ".bias", model.denses[i].bias);
    }
    put_u32(buf, crc32(buf.data(), buf.size()));

    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open for writing: " + path);
    f.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
    if (!f) throw IoError("write failed: " + path);
}

Model load_model(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open model file: " + path);
    std::vector<std::uint8_t> buf((std::istreambuf_iterator<char>(f)),
                                  std::istreambuf_iterator<char>());

    if (buf.size() < 4) throw IoError("model file truncated");
    if (std::memcmp(buf.data(), kMagic, 4) != 0)
        throw IoError("bad magic: not an MTCN model file");
    if (buf.size() < 4 + 2 + 4) throw IoError("model file truncated");

    Reader r(buf.data() + 4, buf.size() - 8); // skip magic, exclude CRC
    const std::uint16_t version = r.u16();
    if (version != kFormatVersion)
        throw IoError("unsupported model format version " + std::to_string(version));

    Model model;
    model.config = decode_config(r.str());
    validate_config(model.config);

    const std::uint32_t n_tensors = r.u32();
    for (const LayerSpec& l : model.config.layers) {
        if (l.kind == LayerKind::Conv) model.convs.emplace_back();
        else if (l.kind == LayerKind::Dense) model.denses.emplace_back();
    }

    for (std::uint32_t i = 0; i < n_tensors; ++i) {
        const std::string name = r.str();
        const std::uint32_t rank = r.u32();
        std::vector<std::size_t> shape(rank);
        for (std::uint32_t d = 0; d < rank; ++d) shape[d] = r.u64();
        Tensor t(shape);
        for (std::size_t j = 0; j < t.size(); ++j) t[j] = r.f32();

        const auto dot = name.find('.');
        if (dot == std::string::npos) throw IoError("bad tensor name: " + name);
        const std::string layer = name.substr(0, dot);
        const std::string field = name.substr(dot + 1);
        if (layer.rfind("conv", 0) == 0) {
            const std::size_t idx = std::stoul(layer.substr(4));
            if (idx >= model.convs.size()) throw IoError("tensor for unknown layer: " + name);
            if (field == "kernel") model.convs[idx].kernel = std::move(t);
            else if (field == "bias") model.convs[idx].bias = std::move(t);
            else throw IoError("unknown tensor field: " + name);
        } else if (layer.rfind("dense", 0) == 0) {
            const std::size_t idx = std::stoul(layer.substr(5));
            if (idx >= model.denses.size()) throw IoError("tensor for unknown layer: " + name);
            if (field == "weights") model.denses[idx].weights = std::move(t);
            else if (field == "bias") model.denses[idx].bias = std::move(t);
            else throw IoError("unknown tensor field: " + name);
        } else {
            throw IoError("unknown tensor name: " + name);
        }
    }
    if (r.remaining() != 0) throw IoError("trailing bytes in model file");

    // Structure parsed cleanly; now verify integrity of the whole blob.
    const std::uint32_t stored_crc = static_cast<std::uint32_t>(buf[buf.size() - 4]) |
                                     (static_cast<std::uint32_t>(buf[buf.size() - 3]) << 8) |
                                     (static_cast<std::uint32_t>(buf[buf.size() - 2]) << 16) |
                                     (static_cast<std::uint32_t>(buf[buf.size() - 1]) << 24);
    if (crc32(buf.data(), buf.size() - 4) != stored_crc)
        throw IoError("model file checksum mismatch");

    // Conv strides live in the config, not in tensor blobs.
    std::size_t ci = 0;
    for (const LayerSpec& l : model.config.layers) {
        if (l.kind == LayerKind::Conv) {
            model.convs[ci].stride_h = l.stride_h;
            model.convs[ci].stride_w = l.stride_w;
            ++ci;
        }
    }
    if (model.built_param_count() != param_count(model.config))
        throw IoError("model file tensor sizes do not match its config");
    return model;
}

} // namespace mtcn
