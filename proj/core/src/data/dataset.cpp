#include "hill/data/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cstring>
#include <cmath>
#include <fstream>
#include <numbers>
#include <numeric>
#include <sstream>

#include "hill/error.hpp"
#include "hill/util/rng.hpp"

namespace hill::data {

std::string to_string(Split split) {
    switch (split) {
        case Split::train: return "train";
        case Split::val: return "val";
        case Split::test: return "test";
    }
    return "?";
}

const std::vector<std::size_t>& Dataset::indices(Split split) const {
    switch (split) {
        case Split::train: return train;
        case Split::val: return val;
        case Split::test: return test;
    }
    return train;
}

void Dataset::validate() const {
    if (input_shape.empty() || feature_count() == 0) throw Error(ErrorCode::invalid_argument, "empty input shape");
    if (inputs.size() != labels.size() * feature_count()) {
        throw Error(ErrorCode::invalid_argument, "inputs length does not match labels x features");
    }
    const auto c = static_cast<int>(num_classes());
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] < 0 || labels[i] >= c) {
            throw Error(ErrorCode::invalid_argument, "label " + std::to_string(labels[i]) + " at row " +
                                                         std::to_string(i) + " outside [0," + std::to_string(c) + ")");
        }
    }
    std::vector<char> used(size(), 0);
    for (const auto* part : {&train, &val, &test}) {
        for (auto i : *part) {
            if (i >= size() || used[i]) throw Error(ErrorCode::invalid_argument, "splits overlap or index out of range");
            used[i] = 1;
        }
    }
}

namespace {

std::vector<std::string> default_class_names(std::size_t c) {
    std::vector<std::string> names;
    for (std::size_t i = 0; i < c; ++i) names.push_back("class_" + std::to_string(i));
    return names;
}

void require(bool ok, const std::string& what) {
    if (!ok) throw Error(ErrorCode::invalid_argument, what);
}

}  // namespace

Dataset gen_blobs(std::size_t num_classes, std::size_t per_class, std::size_t dim, double center_spread,
                  double noise_sigma, std::uint64_t seed) {
    require(num_classes >= 2, "gen_blobs: need at least 2 classes");
    require(per_class >= 2, "gen_blobs: need at least 2 samples per class");
    require(dim >= 2, "gen_blobs: dim must be >= 2");
    require(noise_sigma > 0.0 && std::isfinite(noise_sigma), "gen_blobs: noise_sigma must be positive");
    require(center_spread >= 0.0 && std::isfinite(center_spread), "gen_blobs: center_spread must be >= 0");

    Rng rng(derive_seed(seed, 0xB10B5));
    std::vector<double> centers(num_classes * dim);
    for (auto& v : centers) v = center_spread * rng.normal();

    Dataset ds;
    ds.name = "blobs";
    ds.input_shape = {dim};
    ds.class_names = default_class_names(num_classes);
    ds.seed = seed;
    ds.inputs.reserve(num_classes * per_class * dim);
    for (std::size_t c = 0; c < num_classes; ++c) {
        for (std::size_t k = 0; k < per_class; ++k) {
            for (std::size_t d = 0; d < dim; ++d) {
                ds.inputs.push_back(static_cast<float>(centers[c * dim + d] + noise_sigma * rng.normal()));
            }
            ds.labels.push_back(static_cast<int>(c));
        }
    }
    ds.train.resize(ds.size());
    std::iota(ds.train.begin(), ds.train.end(), std::size_t{0});
    return ds;
}

Dataset gen_rings(std::size_t num_classes, std::size_t per_class, double noise_sigma, std::uint64_t seed) {
    require(num_classes >= 2, "gen_rings: need at least 2 classes");
    require(per_class >= 2, "gen_rings: need at least 2 samples per class");
    require(noise_sigma >= 0.0 && std::isfinite(noise_sigma), "gen_rings: noise_sigma must be >= 0");

    Rng rng(derive_seed(seed, 0x21265));
    Dataset ds;
    ds.name = "rings";
    ds.input_shape = {2};
    ds.class_names = default_class_names(num_classes);
    ds.seed = seed;
    for (std::size_t c = 0; c < num_classes; ++c) {
        const double radius = static_cast<double>(c + 1);
        for (std::size_t j = 0; j < per_class; ++j) {
            const double angle = 2.0 * std::numbers::pi * static_cast<double>(j) / static_cast<double>(per_class);
            double x = radius * std::cos(angle);
            double y = radius * std::sin(angle);
            if (noise_sigma > 0.0) {
                x += noise_sigma * rng.normal();
                y += noise_sigma * rng.normal();
            }
            ds.inputs.push_back(static_cast<float>(x));
            ds.inputs.push_back(static_cast<float>(y));
            ds.labels.push_back(static_cast<int>(c));
        }
    }
    ds.train.resize(ds.size());
    std::iota(ds.train.begin(), ds.train.end(), std::size_t{0});
    return ds;
}

namespace {

bool parse_double(std::string_view cell, double& out) {
    while (!cell.empty() && (cell.front() == ' ' || cell.front() == '\t')) cell.remove_prefix(1);
    while (!cell.empty() && (cell.back() == ' ' || cell.back() == '\t' || cell.back() == '\r')) cell.remove_suffix(1);
    if (cell.empty()) return false;
    if (cell.front() == '+') cell.remove_prefix(1);
    const auto* end = cell.data() + cell.size();
    auto [ptr, ec] = std::from_chars(cell.data(), end, out);
    return ec == std::errc() && ptr == end && std::isfinite(out);
}

Dataset finish_loaded(std::string name, ad::Shape input_shape, std::vector<float> inputs, std::vector<int> labels) {
    if (labels.empty()) throw Error(ErrorCode::parse_error, name + ": no rows");
    const int max_label = *std::max_element(labels.begin(), labels.end());
    Dataset ds;
    ds.name = std::move(name);
    ds.input_shape = std::move(input_shape);
    ds.inputs = std::move(inputs);
    ds.labels = std::move(labels);
    ds.class_names = default_class_names(static_cast<std::size_t>(max_label) + 1);
    ds.train.resize(ds.size());
    std::iota(ds.train.begin(), ds.train.end(), std::size_t{0});
    ds.validate();
    return ds;
}

Dataset load_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::io_error, "cannot open " + path.string());
    std::vector<float> inputs;
    std::vector<int> labels;
    std::size_t width = 0;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.find_first_not_of(" \t") == std::string::npos) continue;
        std::vector<std::string_view> cells;
        std::string_view rest(line);
        for (;;) {
            const auto comma = rest.find(',');
            cells.push_back(rest.substr(0, comma));
            if (comma == std::string_view::npos) break;
            rest.remove_prefix(comma + 1);
        }
        if (labels.empty() && width == 0 && cells[0].find("label") != std::string_view::npos) continue;
        auto fail = [&](const std::string& why) {
            throw Error(ErrorCode::parse_error, path.string() + " line " + std::to_string(line_no) + ": " + why);
        };
        if (cells.size() < 2) fail("expected a label and at least one feature");
        if (width == 0) width = cells.size() - 1;
        if (cells.size() - 1 != width) {
            fail("expected " + std::to_string(width) + " features, found " + std::to_string(cells.size() - 1));
        }
        double label = 0.0;
        if (!parse_double(cells[0], label) || label != std::floor(label)) fail("label is not an integer");
        if (label < 0.0 || label > 1e6) fail("label out of range");
        for (std::size_t j = 1; j < cells.size(); ++j) {
            double v = 0.0;
            if (!parse_double(cells[j], v)) fail("non-numeric feature in column " + std::to_string(j + 1));
            inputs.push_back(static_cast<float>(v));
        }
        labels.push_back(static_cast<int>(label));
    }
    return finish_loaded(path.filename().string(), {width}, std::move(inputs), std::move(labels));
}

std::uint32_t read_be32(std::istream& in) {
    unsigned char b[4];
    if (!in.read(reinterpret_cast<char*>(b), 4)) throw Error(ErrorCode::format_error, "truncated IDX header");
    return (std::uint32_t(b[0]) << 24) | (std::uint32_t(b[1]) << 16) | (std::uint32_t(b[2]) << 8) | b[3];
}

}  // namespace

IdxArray read_idx(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::io_error, "cannot open " + path.string());
    const std::uint32_t magic = read_be32(in);
    const unsigned type = (magic >> 8) & 0xFF;
    const unsigned ndims = magic & 0xFF;
    std::size_t elem = 0;
    switch (type) {
        case 0x08: case 0x09: elem = 1; break;
        case 0x0B: elem = 2; break;
        case 0x0C: case 0x0D: elem = 4; break;
        case 0x0E: elem = 8; break;
        default: break;
    }
    if ((magic >> 16) != 0 || elem == 0 || ndims == 0) {
        std::ostringstream os;
        os << path.string() << ": bad IDX magic 0x" << std::hex << magic;
        throw Error(ErrorCode::format_error, os.str());
    }
    IdxArray arr;
    std::size_t count = 1;
    for (unsigned d = 0; d < ndims; ++d) {
        arr.dims.push_back(read_be32(in));
        count *= arr.dims.back();
    }
    std::vector<unsigned char> raw(count * elem);
    if (!in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()))) {
        throw Error(ErrorCode::format_error, path.string() + ": truncated IDX payload");
    }
    arr.values.resize(count);
    for (std::size_t i = 0; i < count; ++i) {
        const unsigned char* p = raw.data() + i * elem;
        std::uint64_t bits = 0;
        for (std::size_t k = 0; k < elem; ++k) bits = (bits << 8) | p[k];
        switch (type) {
            case 0x08: arr.values[i] = static_cast<double>(static_cast<std::uint8_t>(bits)); break;
            case 0x09: arr.values[i] = static_cast<double>(static_cast<std::int8_t>(bits)); break;
            case 0x0B: arr.values[i] = static_cast<double>(static_cast<std::int16_t>(bits)); break;
            case 0x0C: arr.values[i] = static_cast<double>(static_cast<std::int32_t>(bits)); break;
            case 0x0D: {
                const auto u = static_cast<std::uint32_t>(bits);
                float f;
                std::memcpy(&f, &u, 4);
                arr.values[i] = f;
                break;
            }
            case 0x0E: {
                double d;
                std::memcpy(&d, &bits, 8);
                arr.values[i] = d;
                break;
            }
        }
    }
    return arr;
}

namespace {

void write_idx_raw(const std::filesystem::path& path, unsigned type, const std::vector<std::size_t>& dims,
                   const std::vector<unsigned char>& payload) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCode::io_error, "cannot write " + path.string());
    auto be32 = [&](std::uint32_t v) {
        const unsigned char b[4] = {static_cast<unsigned char>(v >> 24), static_cast<unsigned char>(v >> 16),
                                    static_cast<unsigned char>(v >> 8), static_cast<unsigned char>(v)};
        out.write(reinterpret_cast<const char*>(b), 4);
    };
    be32((type << 8) | static_cast<std::uint32_t>(dims.size()));
    for (auto d : dims) be32(static_cast<std::uint32_t>(d));
    out.write(reinterpret_cast<const char*>(payload.data()), static_cast<std::streamsize>(payload.size()));
}

}  // namespace

void write_idx_f32(const std::filesystem::path& path, const std::vector<std::size_t>& dims, std::span<const float> values) {
    std::vector<unsigned char> payload;
    for (float f : values) {
        std::uint32_t u;
        std::memcpy(&u, &f, 4);
        for (int s = 24; s >= 0; s -= 8) payload.push_back(static_cast<unsigned char>(u >> s));
    }
    write_idx_raw(path, 0x0D, dims, payload);
}

void write_idx_u8(const std::filesystem::path& path, const std::vector<std::size_t>& dims,
                  std::span<const std::uint8_t> values) {
    write_idx_raw(path, 0x08, dims, std::vector<unsigned char>(values.begin(), values.end()));
}

Dataset load_table(const std::filesystem::path& path, TableFormat format, const std::filesystem::path& labels_path) {
    if (format == TableFormat::csv) return load_csv(path);
    if (labels_path.empty()) throw Error(ErrorCode::invalid_argument, "IDX inputs need a labels file");
    IdxArray x = read_idx(path);
    IdxArray y = read_idx(labels_path);
    if (y.dims.size() != 1 || y.dims[0] != x.dims[0]) {
        throw Error(ErrorCode::format_error, "labels file must be 1-D with " + std::to_string(x.dims[0]) + " entries");
    }
    ad::Shape input_shape(x.dims.begin() + 1, x.dims.end());
    if (input_shape.empty()) input_shape = {1};
    std::vector<float> inputs(x.values.begin(), x.values.end());
    std::vector<int> labels;
    for (double v : y.values) {
        if (v < 0.0 || v != std::floor(v)) throw Error(ErrorCode::invalid_argument, "label out of range in IDX labels");
        labels.push_back(static_cast<int>(v));
    }
    return finish_loaded(path.filename().string(), std::move(input_shape), std::move(inputs), std::move(labels));
}

Dataset split(Dataset ds, std::span<const double> fractions, std::uint64_t seed) {
    require(!fractions.empty() && fractions.size() <= 3, "split: between 1 and 3 fractions");
    double total = 0.0;
    for (double f : fractions) {
        require(f > 0.0 && std::isfinite(f), "split: fractions must be positive");
        total += f;
    }
    require(total <= 1.0 + 1e-9, "split: fractions sum above 1");

    std::vector<std::vector<std::size_t>> by_class(ds.num_classes());
    for (std::size_t i = 0; i < ds.size(); ++i) by_class[static_cast<std::size_t>(ds.labels[i])].push_back(i);

    std::vector<std::vector<std::size_t>> parts(3);
    for (std::size_t c = 0; c < by_class.size(); ++c) {
        auto& members = by_class[c];
        if (members.size() < fractions.size()) {
            throw Error(ErrorCode::invalid_argument, "split: class " + std::to_string(c) + " has " +
                                                         std::to_string(members.size()) + " samples for " +
                                                         std::to_string(fractions.size()) + " splits");
        }
        Rng rng(derive_seed(seed, 0x5B117, c));
        rng.shuffle(members);
        const double n = static_cast<double>(members.size());
        double cumulative = 0.0;
        std::size_t begin = 0;
        for (std::size_t k = 0; k < fractions.size(); ++k) {
            cumulative += fractions[k];
            const auto end = std::min(members.size(), static_cast<std::size_t>(std::llround(cumulative * n)));
            parts[k].insert(parts[k].end(), members.begin() + static_cast<std::ptrdiff_t>(begin),
                            members.begin() + static_cast<std::ptrdiff_t>(std::max(begin, end)));
            begin = std::max(begin, end);
        }
    }
    for (auto& p : parts) std::sort(p.begin(), p.end());
    ds.train = std::move(parts[0]);
    ds.val = std::move(parts[1]);
    ds.test = std::move(parts[2]);
    ds.seed = seed;
    return ds;
}

Dataset blobs_hard(std::uint64_t seed, const BlobsHardParams& p) {
    Dataset ds = gen_blobs(p.num_classes, p.per_class, p.dim, p.center_spread, p.noise_sigma, seed);
    ds.name = "blobs-hard";
    const double fractions[] = {p.train_fraction, p.val_fraction};
    return split(std::move(ds), fractions, derive_seed(seed, 0x5EED));
}

}  // namespace hill::data
