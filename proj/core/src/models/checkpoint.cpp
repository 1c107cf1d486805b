#include "hill/models/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <iterator>
#include <map>

#include "../json_io.hpp"
#include "hill/error.hpp"

namespace hill::models {

namespace {

using detail::json;

constexpr char kMagic[8] = {'H', 'I', 'L', 'L', 'C', 'K', 'P', 'T'};

struct PendingTensor {
    std::string name;
    ad::Shape shape;
    std::span<const float> values;
};

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint32_t get_u32(std::span<const std::uint8_t> bytes, std::size_t at) {
    std::uint32_t v = 0;
    for (int i = 3; i >= 0; --i) v = (v << 8) | bytes[at + static_cast<std::size_t>(i)];
    return v;
}

void put_f32(std::vector<std::uint8_t>& out, float f) {
    std::uint32_t u;
    std::memcpy(&u, &f, 4);
    put_u32(out, u);
}

[[noreturn]] void bad(const std::string& why) { throw Error(ErrorCode::format_error, "checkpoint: " + why); }

}  // namespace

std::vector<std::uint8_t> encode_checkpoint(const Backbone<float>& backbone,
                                            const projection::Projector<float>& projector,
                                            const ad::Optimizer<float>& optimizer) {
    std::vector<PendingTensor> tensors;
    for (const auto& p : backbone.named_parameters()) {
        tensors.push_back({"backbone/" + p.name, p.value.shape(), p.value.data()});
    }
    const char* proj_names[] = {"projector/w1", "projector/b1", "projector/w2", "projector/b2"};
    for (std::size_t i = 0; i < projector.parameters().size(); ++i) {
        const auto& t = projector.parameters()[i];
        tensors.push_back({proj_names[i], t.shape(), t.data()});
    }
    const char* aux_names[] = {"projector/aux.weight", "projector/aux.bias"};
    for (std::size_t i = 0; i < projector.aux_parameters().size(); ++i) {
        const auto& t = projector.aux_parameters()[i];
        tensors.push_back({aux_names[i], t.shape(), t.data()});
    }
    for (std::size_t i = 0; i < optimizer.first_moments().size(); ++i) {
        const auto& m = optimizer.first_moments()[i];
        tensors.push_back({"optimizer/m/" + std::to_string(i), {m.size()}, m});
        const auto& v = optimizer.second_moments()[i];
        if (!v.empty()) tensors.push_back({"optimizer/v/" + std::to_string(i), {v.size()}, v});
    }

    json header;
    header["dtype"] = "f32le";
    header["backbone"] = detail::spec_to_json(backbone.spec());
    header["backbone_seed"] = backbone.seed();
    header["projector"] = {{"latent_dim", projector.latent_dim()},
                           {"hidden", projector.hidden()},
                           {"num_classes", projector.num_classes()},
                           {"frozen", projector.frozen()},
                           {"sigma_ref", projector.sigma_ref() ? json(*projector.sigma_ref()) : json(nullptr)}};
    json opt = detail::optimizer_to_json(optimizer.config());
    opt["step_count"] = optimizer.step_count();
    opt["buffers"] = optimizer.first_moments().size();
    header["optimizer"] = opt;
    json entries = json::array();
    std::size_t offset = 0;
    for (const auto& t : tensors) {
        // Zero-sized moment buffers never occur: parameters are non-empty.
        entries.push_back({{"name", t.name}, {"shape", t.shape}, {"offset", offset}, {"length", t.values.size()}});
        offset += t.values.size() * 4;
    }
    header["tensors"] = entries;

    const std::string text = header.dump();
    std::vector<std::uint8_t> out(kMagic, kMagic + 8);
    put_u32(out, kCheckpointVersion);
    put_u32(out, static_cast<std::uint32_t>(text.size()));
    out.insert(out.end(), text.begin(), text.end());
    out.reserve(out.size() + offset);
    for (const auto& t : tensors) {
        for (float f : t.values) put_f32(out, f);
    }
    return out;
}

Checkpoint decode_checkpoint(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < 16) bad("truncated header");
    if (std::memcmp(bytes.data(), kMagic, 8) != 0) bad("bad magic");
    const std::uint32_t version = get_u32(bytes, 8);
    if (version != kCheckpointVersion) bad("unsupported version " + std::to_string(version));
    const std::uint32_t header_len = get_u32(bytes, 12);
    if (bytes.size() < 16 + std::size_t{header_len}) bad("truncated header");
    json header;
    try {
        header = json::parse(bytes.begin() + 16, bytes.begin() + 16 + header_len);
    } catch (const json::exception& e) {
        bad(std::string("header parse error: ") + e.what());
    }
    const auto payload = bytes.subspan(16 + header_len);

    try {
        if (header.at("dtype").get<std::string>() != "f32le") bad("unsupported dtype");
        std::map<std::string, std::pair<ad::Shape, std::vector<float>>> tensors;
        for (const auto& e : header.at("tensors")) {
            const auto name = e.at("name").get<std::string>();
            const auto shape = e.at("shape").get<ad::Shape>();
            const auto offset = e.at("offset").get<std::size_t>();
            const auto length = e.at("length").get<std::size_t>();
            if (ad::numel(shape) != length) bad("tensor " + name + " length disagrees with its shape");
            if (offset + length * 4 > payload.size() || offset % 4 != 0) bad("tensor " + name + " exceeds payload (truncated blob)");
            std::vector<float> values(length);
            for (std::size_t i = 0; i < length; ++i) {
                const std::uint32_t u = get_u32(payload, offset + 4 * i);
                std::memcpy(&values[i], &u, 4);
            }
            tensors[name] = {shape, std::move(values)};
        }
        auto take = [&](const std::string& name, const ad::Shape& expected) {
            auto it = tensors.find(name);
            if (it == tensors.end()) bad("missing tensor " + name);
            if (it->second.first != expected) {
                throw Error(ErrorCode::shape_mismatch, "checkpoint: tensor " + name + " has shape " +
                                                           ad::to_string(it->second.first) + ", expected " +
                                                           ad::to_string(expected));
            }
            return it->second.second;
        };

        const auto spec = detail::spec_from_json(header.at("backbone"));
        const auto seed = header.at("backbone_seed").get<std::uint64_t>();
        const auto layout = Backbone<float>::build(spec, seed);
        std::vector<NamedParameter<float>> params;
        for (const auto& p : layout.named_parameters()) {
            params.push_back({p.name, ad::Tensor<float>::parameter(p.value.shape(), take("backbone/" + p.name, p.value.shape()))});
        }

        const auto& pj = header.at("projector");
        const auto d = pj.at("latent_dim").get<std::size_t>();
        const auto h = pj.at("hidden").get<std::size_t>();
        const auto c = pj.at("num_classes").get<std::size_t>();
        const bool frozen = pj.at("frozen").get<bool>();
        std::optional<double> sigma;
        if (!pj.at("sigma_ref").is_null()) sigma = pj.at("sigma_ref").get<double>();
        std::vector<ad::Tensor<float>> proj = {
            ad::Tensor<float>::parameter({d, h}, take("projector/w1", {d, h})),
            ad::Tensor<float>::parameter({h}, take("projector/b1", {h})),
            ad::Tensor<float>::parameter({h, 2}, take("projector/w2", {h, 2})),
            ad::Tensor<float>::parameter({2}, take("projector/b2", {2}))};
        std::vector<ad::Tensor<float>> aux;
        if (!frozen) {
            aux = {ad::Tensor<float>::parameter({2, c}, take("projector/aux.weight", {2, c})),
                   ad::Tensor<float>::parameter({c}, take("projector/aux.bias", {c}))};
        }

        const auto& oj = header.at("optimizer");
        ad::Optimizer<float> optimizer(detail::optimizer_from_json(oj));
        const auto buffers = oj.at("buffers").get<std::size_t>();
        std::vector<std::vector<float>> m, v;
        if (buffers != 0 && buffers != params.size()) bad("optimizer buffer count disagrees with the backbone");
        for (std::size_t i = 0; i < buffers; ++i) {
            const ad::Shape shape{params[i].value.size()};
            m.push_back(take("optimizer/m/" + std::to_string(i), shape));
            if (optimizer.config().kind == ad::OptimizerKind::adam) {
                v.push_back(take("optimizer/v/" + std::to_string(i), shape));
            } else {
                v.emplace_back();
            }
        }
        optimizer.restore(oj.at("step_count").get<std::uint64_t>(), std::move(m), std::move(v));

        return Checkpoint{Backbone<float>(spec, std::move(params), seed),
                          projection::Projector<float>::restore(d, h, c, std::move(proj), std::move(aux), frozen, sigma),
                          std::move(optimizer)};
    } catch (const json::exception& e) {
        bad(std::string("malformed header: ") + e.what());
    }
}

void save_checkpoint(const std::filesystem::path& path, const Backbone<float>& backbone,
                     const projection::Projector<float>& projector, const ad::Optimizer<float>& optimizer) {
    const auto bytes = encode_checkpoint(backbone, projector, optimizer);
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error(ErrorCode::io_error, "cannot write " + tmp.string());
        out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
        if (!out) throw Error(ErrorCode::io_error, "short write to " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::io_error, "cannot open " + path.string());
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return decode_checkpoint(bytes);
}

}  // namespace hill::models
