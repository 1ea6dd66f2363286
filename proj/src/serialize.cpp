#include "cpn/serialize.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace cpn {

namespace {

constexpr char kMagic[4] = {'C', 'P', 'N', 'M'};
constexpr std::uint32_t kVersion = 1;

void write_u32(std::ostream& os, std::uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                          static_cast<unsigned char>(v >> 16),
                          static_cast<unsigned char>(v >> 24)};
    os.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t read_u32(std::istream& is) {
    unsigned char b[4];
    is.read(reinterpret_cast<char*>(b), 4);
    if (!is) throw std::runtime_error("load_model: truncated file");
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

void write_f32(std::ostream& os, float v) {
    std::uint32_t bits;
    std::memcpy(&bits, &v, 4);
    write_u32(os, bits);
}

float read_f32(std::istream& is) {
    std::uint32_t bits = read_u32(is);
    float v;
    std::memcpy(&v, &bits, 4);
    return v;
}

void write_string(std::ostream& os, const std::string& s) {
    write_u32(os, static_cast<std::uint32_t>(s.size()));
    os.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string read_string(std::istream& is) {
    std::uint32_t len = read_u32(is);
    if (len > (1u << 24)) throw std::runtime_error("load_model: implausible string length");
    std::string s(len, '\0');
    is.read(s.data(), len);
    if (!is) throw std::runtime_error("load_model: truncated file");
    return s;
}

void write_f32_block(std::ostream& os, const float* data, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) write_f32(os, data[i]);
}

void read_f32_block(std::istream& is, float* data, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) data[i] = read_f32(is);
}

}  // namespace

void save_model(const Model<float>& model, const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("save_model: cannot open " + path + " for writing");
    os.write(kMagic, 4);
    write_u32(os, kVersion);
    write_string(os, model.spec.name);

    write_u32(os, static_cast<std::uint32_t>(model.spec.layers.size()));
    for (const auto& l : model.spec.layers) {
        if (const auto* c = std::get_if<ConvDesc>(&l)) {
            os.put(0);
            write_u32(os, static_cast<std::uint32_t>(c->out_channels));
            write_u32(os, static_cast<std::uint32_t>(c->kernel));
            write_u32(os, static_cast<std::uint32_t>(c->stride));
        } else {
            const auto& p = std::get<PoolDesc>(l);
            os.put(1);
            write_u32(os, static_cast<std::uint32_t>(p.window));
            write_u32(os, static_cast<std::uint32_t>(p.stride));
        }
    }
    write_u32(os, static_cast<std::uint32_t>(model.spec.input_channels));
    write_u32(os, static_cast<std::uint32_t>(model.spec.input_w));
    write_u32(os, static_cast<std::uint32_t>(model.spec.input_h));
    write_u32(os, static_cast<std::uint32_t>(model.spec.num_classes));

    write_u32(os, static_cast<std::uint32_t>(model.templates.aspect_ratios.size()));
    for (std::size_t i = 0; i < model.templates.aspect_ratios.size(); ++i) {
        write_f32(os, model.templates.aspect_ratios[i]);
        write_f32(os, model.templates.sizes[i].first);
        write_f32(os, model.templates.sizes[i].second);
    }

    write_u32(os, static_cast<std::uint32_t>(model.metadata.size()));
    for (const auto& [k, v] : model.metadata) {
        write_string(os, k);
        write_string(os, v);
    }

    for (const auto& p : model.params) {
        write_f32_block(os, p.kernels.data.data(), p.kernels.size());
        write_f32_block(os, p.bias.data(), static_cast<std::size_t>(p.bias.size()));
    }
    if (!os) throw std::runtime_error("save_model: write failed for " + path);
}

Model<float> load_model(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("load_model: cannot open " + path);
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, kMagic, 4) != 0) {
        throw std::runtime_error("load_model: " + path + " is not a CPNM model file");
    }
    std::uint32_t version = read_u32(is);
    if (version != kVersion) {
        throw std::runtime_error("load_model: unsupported format version " +
                                 std::to_string(version));
    }
    Model<float> model;
    model.spec.name = read_string(is);

    std::uint32_t layer_count = read_u32(is);
    for (std::uint32_t i = 0; i < layer_count; ++i) {
        int kind = is.get();
        if (kind == 0) {
            int out = static_cast<int>(read_u32(is));
            int kernel = static_cast<int>(read_u32(is));
            int stride = static_cast<int>(read_u32(is));
            model.spec.layers.push_back(ConvDesc{out, kernel, stride});
        } else if (kind == 1) {
            int window = static_cast<int>(read_u32(is));
            int stride = static_cast<int>(read_u32(is));
            model.spec.layers.push_back(PoolDesc{window, stride});
        } else {
            throw std::runtime_error("load_model: corrupt layer descriptor");
        }
    }
    model.spec.input_channels = static_cast<int>(read_u32(is));
    model.spec.input_w = static_cast<int>(read_u32(is));
    model.spec.input_h = static_cast<int>(read_u32(is));
    model.spec.num_classes = static_cast<int>(read_u32(is));

    std::uint32_t template_count = read_u32(is);
    model.templates.num_classes = model.spec.num_classes;
    for (std::uint32_t i = 0; i < template_count; ++i) {
        model.templates.aspect_ratios.push_back(read_f32(is));
        float w = read_f32(is);
        float h = read_f32(is);
        model.templates.sizes.emplace_back(w, h);
    }

    std::uint32_t meta_count = read_u32(is);
    for (std::uint32_t i = 0; i < meta_count; ++i) {
        std::string k = read_string(is);
        std::string v = read_string(is);
        model.metadata.emplace_back(std::move(k), std::move(v));
    }

    validate_geometry(model.spec);
    model.stride = compute_stride(model.spec);
    int in_c = model.spec.input_channels;
    for (const auto& l : model.spec.layers) {
        if (const auto* c = std::get_if<ConvDesc>(&l)) {
            ConvParams<float> p;
            p.kernels = Tensor<float>(c->out_channels, in_c, c->kernel, c->kernel);
            read_f32_block(is, p.kernels.data.data(), p.kernels.size());
            p.bias = Vec<float>::Zero(c->out_channels);
            read_f32_block(is, p.bias.data(), static_cast<std::size_t>(p.bias.size()));
            model.params.push_back(std::move(p));
            in_c = c->out_channels;
        }
    }
    if (!is) throw std::runtime_error("load_model: truncated parameter blob in " + path);
    return model;
}

}  // namespace cpn
