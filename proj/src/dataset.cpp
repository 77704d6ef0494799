#include "advsel/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "advsel/rng.hpp"
#include "advsel/serialize.hpp"

namespace advsel {

// ---------------------------------------------------------------------------
// FeatureDomain

FeatureDomain FeatureDomain::continuous(double lo, double hi) {
    FeatureDomain d;
    d.v_ = Continuous{lo, hi};
    d.validate();
    return d;
}

FeatureDomain FeatureDomain::boolean() {
    FeatureDomain d;
    d.v_ = Boolean{};
    return d;
}

FeatureDomain FeatureDomain::quantized(std::vector<double> levels) {
    FeatureDomain d;
    d.v_ = Quantized{std::move(levels)};
    d.validate();
    return d;
}

void FeatureDomain::validate() const {
    if (const auto* c = std::get_if<Continuous>(&v_)) {
        if (!std::isfinite(c->lo) || !std::isfinite(c->hi) || !(c->lo < c->hi))
            throw std::invalid_argument("continuous domain requires finite lo < hi");
    } else if (const auto* q = std::get_if<Quantized>(&v_)) {
        if (q->levels.size() < 2) throw std::invalid_argument("quantized domain needs >= 2 levels");
        for (std::size_t i = 0; i < q->levels.size(); ++i) {
            if (!std::isfinite(q->levels[i]))
                throw std::invalid_argument("quantized level must be finite");
            if (i > 0 && !(q->levels[i - 1] < q->levels[i]))
                throw std::invalid_argument("quantized levels must be strictly increasing");
        }
    }
}

double FeatureDomain::lo() const {
    if (const auto* c = std::get_if<Continuous>(&v_)) return c->lo;
    if (is_boolean()) return 0.0;
    return std::get<Quantized>(v_).levels.front();
}

double FeatureDomain::hi() const {
    if (const auto* c = std::get_if<Continuous>(&v_)) return c->hi;
    if (is_boolean()) return 1.0;
    return std::get<Quantized>(v_).levels.back();
}

std::vector<double> FeatureDomain::levels() const {
    if (is_boolean()) return {0.0, 1.0};
    if (const auto* q = std::get_if<Quantized>(&v_)) return q->levels;
    throw std::logic_error("levels() called on a continuous domain");
}

bool FeatureDomain::contains(double v, double tol) const {
    if (!std::isfinite(v)) return false;
    if (const auto* c = std::get_if<Continuous>(&v_)) return v >= c->lo - tol && v <= c->hi + tol;
    for (double level : levels())
        if (std::abs(v - level) <= tol) return true;
    return false;
}

// ---------------------------------------------------------------------------
// FeatureMask

std::size_t FeatureMask::cardinality() const {
    std::size_t n = 0;
    for (char b : bits) n += (b != 0);
    return n;
}

std::vector<std::size_t> FeatureMask::selected_indices() const {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < bits.size(); ++i)
        if (bits[i]) idx.push_back(i);
    return idx;
}

FeatureMask FeatureMask::all_on(std::size_t d) {
    FeatureMask m;
    m.bits.assign(d, 1);
    return m;
}

FeatureMask FeatureMask::from_indices(std::size_t d, const std::vector<std::size_t>& idx) {
    FeatureMask m;
    m.bits.assign(d, 0);
    for (std::size_t i : idx) {
        if (i >= d) throw std::invalid_argument("mask index out of range");
        m.bits[i] = 1;
    }
    return m;
}

// ---------------------------------------------------------------------------
// FoldPlan

std::vector<std::size_t> FoldPlan::fold_indices(int fold) const {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < assignments.size(); ++i)
        if (assignments[i] == fold) idx.push_back(i);
    return idx;
}

std::vector<std::size_t> FoldPlan::complement_indices(int fold) const {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < assignments.size(); ++i)
        if (assignments[i] != fold) idx.push_back(i);
    return idx;
}

// ---------------------------------------------------------------------------
// Dataset

std::vector<std::size_t> Dataset::indices_of_label(int label) const {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < labels.size(); ++i)
        if (labels[i] == label) idx.push_back(i);
    return idx;
}

Matrix Dataset::rows_with_label(int label) const {
    Matrix m;
    m.cols = dim();
    for (std::size_t i : indices_of_label(label)) m.push_row(features.row(i));
    return m;
}

Dataset Dataset::subset(const std::vector<std::size_t>& indices) const {
    Dataset out;
    out.features.cols = dim();
    out.domains = domains;
    out.feature_names = feature_names;
    for (std::size_t i : indices) {
        if (i >= size()) throw std::invalid_argument("subset index out of range");
        out.features.push_row(features.row(i));
        out.labels.push_back(labels[i]);
    }
    return out;
}

bool Dataset::has_both_classes() const {
    bool pos = false, neg = false;
    for (int y : labels) (y > 0 ? pos : neg) = true;
    return pos && neg;
}

void Dataset::validate() const {
    if (size() < 1 || dim() < 1) throw std::invalid_argument("dataset must have n >= 1 and d >= 1");
    if (labels.size() != size()) throw std::invalid_argument("label count does not match rows");
    if (domains.size() != dim()) throw std::invalid_argument("domain count does not match features");
    if (!feature_names.empty() && feature_names.size() != dim())
        throw std::invalid_argument("feature name count does not match features");
    for (int y : labels)
        if (y != -1 && y != 1) throw std::invalid_argument("labels must be -1 or +1");
    for (const auto& d : domains) d.validate();
    for (std::size_t i = 0; i < size(); ++i) {
        auto row = features.row(i);
        for (std::size_t j = 0; j < dim(); ++j) {
            if (!std::isfinite(row[j]))
                throw std::invalid_argument("non-finite feature value at row " + std::to_string(i));
            if (!domains[j].contains(row[j]))
                throw std::invalid_argument("feature value outside its domain at row " +
                                            std::to_string(i) + ", column " + std::to_string(j));
        }
    }
}

// ---------------------------------------------------------------------------
// Parsing

namespace {

double parse_double(std::string_view tok, std::size_t line_no, const char* what) {
    double v = 0.0;
    const char* first = tok.data();
    const char* last = tok.data() + tok.size();
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc{} || ptr != last)
        throw std::runtime_error("line " + std::to_string(line_no) + ": cannot parse " + what +
                                 " '" + std::string(tok) + "'");
    if (!std::isfinite(v))
        throw std::runtime_error("line " + std::to_string(line_no) + ": non-finite " + what);
    return v;
}

int parse_label(std::string_view tok, std::size_t line_no) {
    std::string_view t = tok;
    if (!t.empty() && t.front() == '+') t.remove_prefix(1);
    if (t == "1") return +1;
    if (t == "-1") return -1;
    throw std::runtime_error("line " + std::to_string(line_no) + ": label '" + std::string(tok) +
                             "' is not -1 or +1");
}

std::vector<std::string> split(const std::string& line, char sep) {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream ss(line);
    while (std::getline(ss, cur, sep)) out.push_back(cur);
    if (!line.empty() && line.back() == sep) out.emplace_back();
    return out;
}

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

std::vector<FeatureDomain> infer_domains(const Matrix& features) {
    std::vector<FeatureDomain> out;
    out.reserve(features.cols);
    for (std::size_t j = 0; j < features.cols; ++j) {
        bool boolean = true;
        double lo = features.at(0, j), hi = lo;
        for (std::size_t i = 0; i < features.rows; ++i) {
            const double v = features.at(i, j);
            if (v != 0.0 && v != 1.0) boolean = false;
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
        if (boolean) {
            out.push_back(FeatureDomain::boolean());
        } else {
            if (lo == hi) {  // constant column: widen so lo < hi holds
                lo -= 0.5;
                hi += 0.5;
            }
            out.push_back(FeatureDomain::continuous(lo, hi));
        }
    }
    return out;
}

Dataset finish_dataset(Matrix features, std::vector<int> labels,
                       const std::optional<std::vector<FeatureDomain>>& domains,
                       std::vector<std::string> names) {
    Dataset ds;
    ds.features = std::move(features);
    ds.labels = std::move(labels);
    ds.feature_names = std::move(names);
    ds.domains = domains ? *domains : infer_domains(ds.features);
    ds.validate();
    return ds;
}

Dataset load_dense_csv(std::istream& in, const std::optional<std::vector<FeatureDomain>>& domains) {
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("line 1: empty file");
    const auto header = split(trim(line), ',');
    std::size_t y_col = header.size();
    std::vector<std::string> names;
    for (std::size_t j = 0; j < header.size(); ++j) {
        if (trim(header[j]) == "y") {
            if (y_col != header.size()) throw std::runtime_error("line 1: duplicate 'y' column");
            y_col = j;
        } else {
            names.push_back(trim(header[j]));
        }
    }
    if (y_col == header.size()) throw std::runtime_error("line 1: missing 'y' column in header");

    Matrix features;
    features.cols = header.size() - 1;
    std::vector<int> labels;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        const auto toks = split(trim(line), ',');
        if (toks.size() != header.size())
            throw std::runtime_error("line " + std::to_string(line_no) + ": expected " +
                                     std::to_string(header.size()) + " columns, got " +
                                     std::to_string(toks.size()));
        std::vector<double> row;
        row.reserve(features.cols);
        for (std::size_t j = 0; j < toks.size(); ++j) {
            if (j == y_col)
                labels.push_back(parse_label(trim(toks[j]), line_no));
            else
                row.push_back(parse_double(trim(toks[j]), line_no, "feature value"));
        }
        features.push_row(row);
    }
    if (features.rows == 0) throw std::runtime_error("no data rows");
    return finish_dataset(std::move(features), std::move(labels), domains, std::move(names));
}

Dataset load_sparse(std::istream& in, const std::optional<std::vector<FeatureDomain>>& domains) {
    struct Row {
        int label;
        std::vector<std::pair<std::size_t, double>> entries;  // 0-based
    };
    std::vector<Row> rows;
    std::size_t max_index = 0;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string t = trim(line);
        if (t.empty()) continue;
        std::istringstream ss(t);
        std::string tok;
        ss >> tok;
        Row row;
        row.label = parse_label(tok, line_no);
        std::size_t prev = 0;  // indices are 1-based and strictly increasing
        while (ss >> tok) {
            const auto colon = tok.find(':');
            if (colon == std::string::npos)
                throw std::runtime_error("line " + std::to_string(line_no) +
                                         ": expected idx:value, got '" + tok + "'");
            const std::string idx_s = tok.substr(0, colon);
            std::size_t idx = 0;
            auto [ptr, ec] = std::from_chars(idx_s.data(), idx_s.data() + idx_s.size(), idx);
            if (ec != std::errc{} || ptr != idx_s.data() + idx_s.size() || idx == 0)
                throw std::runtime_error("line " + std::to_string(line_no) +
                                         ": bad feature index '" + idx_s + "' (1-based)");
            if (idx <= prev)
                throw std::runtime_error("line " + std::to_string(line_no) +
                                         ": feature indices must be strictly increasing");
            prev = idx;
            row.entries.emplace_back(idx - 1, parse_double(tok.substr(colon + 1), line_no, "feature value"));
            max_index = std::max(max_index, idx);
        }
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw std::runtime_error("no data rows");

    const std::size_t d = domains ? domains->size() : max_index;
    if (d == 0) throw std::runtime_error("cannot determine dimension: no features seen");
    if (max_index > d)
        throw std::runtime_error("feature index " + std::to_string(max_index) +
                                 " exceeds declared dimension " + std::to_string(d));
    Matrix features(rows.size(), d, 0.0);
    std::vector<int> labels;
    labels.reserve(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        labels.push_back(rows[i].label);
        for (const auto& [j, v] : rows[i].entries) features.at(i, j) = v;
    }
    return finish_dataset(std::move(features), std::move(labels), domains, {});
}

}  // namespace

Dataset load_dataset(const std::string& path, FileFormat format,
                     const std::optional<std::vector<FeatureDomain>>& domains) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open '" + path + "'");
    try {
        return format == FileFormat::dense_csv ? load_dense_csv(in, domains)
                                               : load_sparse(in, domains);
    } catch (const std::exception& e) {
        throw std::runtime_error(path + ": " + e.what());
    }
}

void save_dataset(const Dataset& ds, const std::string& path, FileFormat format) {
    std::ostringstream out;
    if (format == FileFormat::dense_csv) {
        out << "y";
        for (std::size_t j = 0; j < ds.dim(); ++j) {
            out << ',' << (ds.feature_names.empty() ? "f" + std::to_string(j + 1) : ds.feature_names[j]);
        }
        out << '\n';
        for (std::size_t i = 0; i < ds.size(); ++i) {
            out << (ds.labels[i] > 0 ? "1" : "-1");
            const auto row = ds.features.row(i);
            for (std::size_t j = 0; j < ds.dim(); ++j) out << ',' << format_double(row[j]);
            out << '\n';
        }
    } else {
        for (std::size_t i = 0; i < ds.size(); ++i) {
            out << (ds.labels[i] > 0 ? "+1" : "-1");
            const auto row = ds.features.row(i);
            for (std::size_t j = 0; j < ds.dim(); ++j)
                if (row[j] != 0.0) out << ' ' << (j + 1) << ':' << format_double(row[j]);
            out << '\n';
        }
    }
    write_text_file(path, out.str());
}

// ---------------------------------------------------------------------------
// Transformations

Dataset cap_and_normalize(const Dataset& ds, double cap) {
    if (!(cap > 0.0)) throw std::invalid_argument("cap must be positive");
    Dataset out;
    out.labels = ds.labels;
    out.feature_names = ds.feature_names;
    out.features = Matrix(ds.size(), ds.dim());

    std::vector<char> integer_counts(ds.dim(), 1);
    std::vector<double> min_scaled(ds.dim(), 0.0);
    for (std::size_t j = 0; j < ds.dim(); ++j) {
        for (std::size_t i = 0; i < ds.size(); ++i) {
            const double v = ds.features.at(i, j);
            if (v < 0.0 || v != std::floor(v)) integer_counts[j] = 0;
            const double scaled = std::min(v, cap) / cap;
            out.features.at(i, j) = scaled;
            min_scaled[j] = std::min(min_scaled[j], scaled);
        }
    }
    out.domains.reserve(ds.dim());
    for (std::size_t j = 0; j < ds.dim(); ++j) {
        if (integer_counts[j]) {
            std::vector<double> levels;
            const auto n = static_cast<std::size_t>(std::floor(cap));
            levels.reserve(n + 2);
            for (std::size_t i = 0; i <= n; ++i) levels.push_back(static_cast<double>(i) / cap);
            if (levels.back() < 1.0) levels.push_back(1.0);
            out.domains.push_back(FeatureDomain::quantized(std::move(levels)));
        } else {
            out.domains.push_back(FeatureDomain::continuous(std::min(min_scaled[j], 0.0), 1.0));
        }
    }
    out.validate();
    return out;
}

Dataset apply_mask(const Dataset& ds, const FeatureMask& mask) {
    if (mask.size() != ds.dim())
        throw std::invalid_argument("mask length " + std::to_string(mask.size()) +
                                    " does not match dimension " + std::to_string(ds.dim()));
    const auto idx = mask.selected_indices();
    if (idx.empty()) throw std::invalid_argument("mask selects no features");
    Dataset out;
    out.labels = ds.labels;
    out.features = Matrix(ds.size(), idx.size());
    for (std::size_t i = 0; i < ds.size(); ++i)
        for (std::size_t jj = 0; jj < idx.size(); ++jj)
            out.features.at(i, jj) = ds.features.at(i, idx[jj]);
    for (std::size_t j : idx) {
        out.domains.push_back(ds.domains[j]);
        if (!ds.feature_names.empty()) out.feature_names.push_back(ds.feature_names[j]);
    }
    return out;
}

FoldPlan stratified_folds(const Dataset& ds, int k, std::uint64_t seed) {
    if (k < 2) throw std::invalid_argument("fold count must be >= 2");
    FoldPlan plan;
    plan.k = k;
    plan.seed = seed;
    plan.assignments.assign(ds.size(), -1);
    Rng rng(substream(seed, "folds"));
    for (int label : {-1, +1}) {
        auto idx = ds.indices_of_label(label);
        if (idx.size() < static_cast<std::size_t>(k))
            throw std::invalid_argument("class " + std::to_string(label) + " has " +
                                        std::to_string(idx.size()) + " samples, fewer than " +
                                        std::to_string(k) + " folds");
        rng.shuffle(idx);
        for (std::size_t i = 0; i < idx.size(); ++i)
            plan.assignments[idx[i]] = static_cast<int>(i % static_cast<std::size_t>(k));
    }
    return plan;
}

Dataset synth_two_gaussians(int n_per_class, int d, double separation, std::uint64_t seed) {
    if (n_per_class < 1 || d < 1)
        throw std::invalid_argument("synth requires n_per_class >= 1 and d >= 1");
    if (separation < 0.0) throw std::invalid_argument("separation must be >= 0");
    const double half = separation / 2.0;
    const double bound = half + 4.0;
    Rng rng(substream(seed, "synth"));
    Dataset ds;
    ds.features = Matrix(static_cast<std::size_t>(2 * n_per_class), static_cast<std::size_t>(d));
    for (int c = 0; c < 2; ++c) {
        const double mean = c == 0 ? -half : +half;
        const int label = c == 0 ? -1 : +1;
        for (int i = 0; i < n_per_class; ++i) {
            const std::size_t r = static_cast<std::size_t>(c * n_per_class + i);
            for (int j = 0; j < d; ++j) {
                double v = mean + rng.gaussian();
                v = std::clamp(v, -bound, bound);
                ds.features.at(r, static_cast<std::size_t>(j)) = v;
            }
            ds.labels.push_back(label);
        }
    }
    for (int j = 0; j < d; ++j) ds.domains.push_back(FeatureDomain::continuous(-bound, bound));
    for (int j = 0; j < d; ++j) ds.feature_names.push_back("f" + std::to_string(j + 1));
    return ds;
}

}  // namespace advsel
