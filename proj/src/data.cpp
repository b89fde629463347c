#include "uda/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <set>
#include <sstream>
#include <stdexcept>

#include "uda/clustering.hpp"
#include "uda/errors.hpp"

namespace uda {

void SyntheticSpec::validate() const {
    if (num_classes < 1 || samples_per_class < 1 || eval_samples_per_class < 0 || input_dim < 2 ||
        cameras_per_domain < 1) {
        throw std::invalid_argument("synthetic spec: counts must be positive and input_dim >= 2");
    }
    if (!(sigma_between > sigma_within && sigma_within >= 0.0)) {
        throw std::invalid_argument("synthetic spec: need sigma_between > sigma_within >= 0");
    }
    if (!(shift.scale_min > 0.0 && shift.scale_min <= shift.scale_max)) {
        throw std::invalid_argument("synthetic spec: need 0 < scale_min <= scale_max");
    }
    if (shift.translation_norm < 0.0) throw std::invalid_argument("synthetic spec: negative translation");
}

namespace {

struct ShiftMap {
    double cos_a = 1.0;
    double sin_a = 0.0;
    Vector translation;
    Vector scale;

    Vector apply(const Vector& x) const {
        Vector y = x;
        y[0] = cos_a * x[0] - sin_a * x[1];
        y[1] = sin_a * x[0] + cos_a * x[1];
        for (std::size_t d = 0; d < y.size(); ++d) y[d] = scale[d] * y[d] + translation[d];
        return y;
    }
};

Vector gaussian(std::mt19937_64& rng, std::size_t dim, double sigma) {
    std::normal_distribution<double> n(0.0, 1.0);
    Vector v(dim);
    for (double& x : v) x = sigma * n(rng);
    return v;
}

}  // namespace

SyntheticData generate(const SyntheticSpec& spec) {
    spec.validate();
    const auto dim = static_cast<std::size_t>(spec.input_dim);
    std::mt19937_64 rng(spec.seed);

    std::vector<Vector> source_centers;
    for (int c = 0; c < spec.num_classes; ++c) source_centers.push_back(gaussian(rng, dim, spec.sigma_between));
    std::vector<Vector> target_centers = source_centers;
    if (!spec.shared_centers) {
        for (Vector& c : target_centers) c = gaussian(rng, dim, spec.sigma_between);
    }

    ShiftMap shift;
    const double angle = spec.shift.rotation_deg * std::numbers::pi / 180.0;
    shift.cos_a = std::cos(angle);
    shift.sin_a = std::sin(angle);
    shift.translation = normalized(gaussian(rng, dim, 1.0));
    for (double& t : shift.translation) t *= spec.shift.translation_norm;
    std::uniform_real_distribution<double> scale(spec.shift.scale_min, spec.shift.scale_max);
    shift.scale.resize(dim);
    for (double& s : shift.scale) s = scale(rng);

    SyntheticData out;
    std::int64_t next_id = 0;
    for (int c = 0; c < spec.num_classes; ++c) {
        for (int i = 0; i < spec.samples_per_class; ++i) {
            Vector x = gaussian(rng, dim, spec.sigma_within);
            for (std::size_t d = 0; d < dim; ++d) x[d] += source_centers[c][d];
            const int cam = static_cast<int>(out.source.size() % spec.cameras_per_domain);
            out.source.push_back(LabeledSample{Sample{next_id++, cam, Domain::source, std::move(x)}, c});
        }
    }
    auto target_draw = [&](int c) {
        Vector x = gaussian(rng, dim, spec.sigma_within);
        for (std::size_t d = 0; d < dim; ++d) x[d] += target_centers[c][d];
        return shift.apply(x);
    };
    for (int c = 0; c < spec.num_classes; ++c) {
        for (int i = 0; i < spec.samples_per_class; ++i) {
            const int cam = static_cast<int>(out.target.size() % spec.cameras_per_domain);
            out.target.push_back(Sample{next_id++, cam, Domain::target, target_draw(c)});
            out.target_hidden_labels.push_back(c);
        }
    }
    for (int c = 0; c < spec.num_classes; ++c) {
        for (int i = 0; i < spec.eval_samples_per_class; ++i) {
            const int cam = static_cast<int>(out.target_eval.size() % spec.cameras_per_domain);
            out.target_eval.push_back(LabeledSample{Sample{next_id++, cam, Domain::target, target_draw(c)}, c});
        }
    }
    return out;
}

namespace {

std::vector<std::string_view> split_commas(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const std::size_t comma = line.find(',', start);
        out.push_back(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return out;
}

template <typename T>
T parse_number(std::string_view field, std::size_t line, const char* what) {
    T value{};
    const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
    if (ec != std::errc{} || ptr != field.data() + field.size() || field.empty()) {
        throw ParseError(line, std::string("bad ") + what + " '" + std::string(field) + "'");
    }
    return value;
}

}  // namespace

FeatureTable parse_features(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    FeatureTable table;
    std::set<std::int64_t> seen;
    bool have_header = false;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto fields = split_commas(line);
        if (!have_header) {
            if (fields.size() < 4 || fields[0] != "instance_id" || fields[1] != "camera_id" || fields[2] != "label" ||
                fields[3] != "dim") {
                throw ParseError(line_no, "expected header instance_id,camera_id,label,dim,f_0,...");
            }
            for (std::size_t i = 4; i < fields.size(); ++i) {
                if (fields[i] != "f_" + std::to_string(i - 4)) {
                    throw ParseError(line_no, "header column " + std::to_string(i) + " should be f_" +
                                                  std::to_string(i - 4));
                }
            }
            table.dim = fields.size() - 4;
            if (table.dim == 0) throw SchemaError(line_no, "header declares no feature columns");
            have_header = true;
            continue;
        }
        if (fields.size() < 4) throw ParseError(line_no, "too few columns");
        FeatureRow row;
        row.instance_id = parse_number<std::int64_t>(fields[0], line_no, "instance_id");
        if (!seen.insert(row.instance_id).second) {
            throw ParseError(line_no, "duplicate instance_id " + std::to_string(row.instance_id));
        }
        row.camera_id = parse_number<int>(fields[1], line_no, "camera_id");
        if (fields[2] != "NA") row.label = parse_number<int>(fields[2], line_no, "label");
        const auto dim = parse_number<std::size_t>(fields[3], line_no, "dim");
        const std::size_t present = fields.size() - 4;
        if (dim != table.dim || present != table.dim) {
            throw SchemaError(line_no, "header dim " + std::to_string(table.dim) + ", row dim " +
                                           std::to_string(dim) + ", " + std::to_string(present) + " feature columns");
        }
        row.features.reserve(dim);
        for (std::size_t i = 4; i < fields.size(); ++i) {
            row.features.push_back(parse_number<double>(fields[i], line_no, "feature"));
        }
        table.rows.push_back(std::move(row));
    }
    if (!have_header) throw ParseError(line_no + 1, "missing header");
    return table;
}

FeatureTable load_features(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_features(buf.str());
}

namespace {

void append_double(std::string& out, double v) {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    out.append(buf, ptr);
}

}  // namespace

std::string format_features(const FeatureTable& table) {
    std::string out = "instance_id,camera_id,label,dim";
    for (std::size_t i = 0; i < table.dim; ++i) out += ",f_" + std::to_string(i);
    out += '\n';
    for (const FeatureRow& r : table.rows) {
        if (r.features.size() != table.dim) throw ShapeError("format_features: row dimension");
        out += std::to_string(r.instance_id) + ',' + std::to_string(r.camera_id) + ',';
        out += r.label ? std::to_string(*r.label) : std::string("NA");
        out += ',' + std::to_string(table.dim);
        for (double v : r.features) {
            out += ',';
            append_double(out, v);
        }
        out += '\n';
    }
    return out;
}

void save_features(const std::filesystem::path& path, const FeatureTable& table) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << format_features(table);
}

FeatureTable to_table(const std::vector<LabeledSample>& samples) {
    FeatureTable t;
    t.dim = samples.empty() ? 0 : samples.front().sample.input.size();
    for (const LabeledSample& s : samples) {
        t.rows.push_back(FeatureRow{s.sample.instance_id, s.sample.camera_id, s.label, s.sample.input});
    }
    return t;
}

FeatureTable to_table(const std::vector<Sample>& samples) {
    FeatureTable t;
    t.dim = samples.empty() ? 0 : samples.front().input.size();
    for (const Sample& s : samples) t.rows.push_back(FeatureRow{s.instance_id, s.camera_id, std::nullopt, s.input});
    return t;
}

std::vector<Sample> samples_from(const FeatureTable& table, Domain domain) {
    std::vector<Sample> out;
    out.reserve(table.rows.size());
    for (const FeatureRow& r : table.rows) out.push_back(Sample{r.instance_id, r.camera_id, domain, r.features});
    return out;
}

std::vector<LabeledSample> labeled_samples_from(const FeatureTable& table, Domain domain) {
    std::vector<LabeledSample> out;
    out.reserve(table.rows.size());
    for (std::size_t i = 0; i < table.rows.size(); ++i) {
        const FeatureRow& r = table.rows[i];
        if (!r.label) throw SchemaError(i + 2, "row has no label");
        out.push_back(LabeledSample{Sample{r.instance_id, r.camera_id, domain, r.features}, *r.label});
    }
    return out;
}

std::vector<std::size_t> pk_sample(std::span<const int> labels, int P, int K, std::mt19937_64& rng) {
    if (P < 1 || K < 1) throw std::invalid_argument("pk_sample: P and K must be positive");
    std::map<int, std::vector<std::size_t>> members;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] != kOutlier) members[labels[i]].push_back(i);
    }
    if (members.size() < 2) throw DegenerateError("pk_sample: fewer than 2 usable classes");
    if (members.size() < static_cast<std::size_t>(P)) {
        throw DegenerateError("pk_sample: P = " + std::to_string(P) + " exceeds " + std::to_string(members.size()) +
                              " usable classes");
    }
    std::vector<int> classes;
    for (const auto& [c, _] : members) classes.push_back(c);
    std::shuffle(classes.begin(), classes.end(), rng);
    classes.resize(static_cast<std::size_t>(P));

    std::vector<std::size_t> batch;
    batch.reserve(static_cast<std::size_t>(P * K));
    for (int c : classes) {
        std::vector<std::size_t> pool = members[c];
        if (pool.size() >= static_cast<std::size_t>(K)) {
            std::shuffle(pool.begin(), pool.end(), rng);
            batch.insert(batch.end(), pool.begin(), pool.begin() + K);
        } else {
            std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
            for (int k = 0; k < K; ++k) batch.push_back(pool[pick(rng)]);
        }
    }
    return batch;
}

std::vector<std::size_t> pk_sample(std::span<const int> labels, int P, int K, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    return pk_sample(labels, P, K, rng);
}

}  // namespace uda
