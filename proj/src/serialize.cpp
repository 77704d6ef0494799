#include "advsel/serialize.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace advsel {

using nlohmann::json;

std::string format_double(double v) {
    char buf[32];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    if (ec != std::errc{}) throw std::runtime_error("format_double failed");
    return std::string(buf, ptr);
}

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write '" + path + "'");
    out << content;
    if (!out) throw std::runtime_error("write failed for '" + path + "'");
}

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// ---------------------------------------------------------------------------
// Feature domains

namespace {

json domain_to_json(const FeatureDomain& d) {
    json j;
    if (d.is_boolean()) {
        j["kind"] = "boolean";
    } else if (d.is_quantized()) {
        j["kind"] = "quantized";
        j["levels"] = d.levels();
    } else {
        j["kind"] = "continuous";
        j["lo"] = d.lo();
        j["hi"] = d.hi();
    }
    return j;
}

FeatureDomain domain_from_json(const json& j) {
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "boolean") return FeatureDomain::boolean();
    if (kind == "quantized") return FeatureDomain::quantized(j.at("levels").get<std::vector<double>>());
    if (kind == "continuous")
        return FeatureDomain::continuous(j.at("lo").get<double>(), j.at("hi").get<double>());
    throw std::runtime_error("unknown domain kind '" + kind + "'");
}

json mask_to_json(const FeatureMask& mask) {
    json bits = json::array();
    for (std::size_t i = 0; i < mask.size(); ++i) bits.push_back(mask.get(i));
    return bits;
}

FeatureMask mask_from_json(const json& bits) {
    FeatureMask m;
    for (const auto& b : bits) m.bits.push_back(b.get<bool>() ? 1 : 0);
    return m;
}

json kernel_to_json(const Kernel& k) {
    json j;
    j["kind"] = k.kind == Kernel::Kind::linear ? "linear" : "rbf";
    if (k.kind == Kernel::Kind::rbf) j["gamma"] = k.gamma;
    return j;
}

Kernel kernel_from_json(const json& j) {
    Kernel k;
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "linear") {
        k.kind = Kernel::Kind::linear;
    } else if (kind == "rbf") {
        k.kind = Kernel::Kind::rbf;
        k.gamma = j.at("gamma").get<double>();
    } else {
        throw std::runtime_error("unknown kernel kind '" + kind + "'");
    }
    return k;
}

json train_config_to_json(const TrainConfig& cfg) {
    json j;
    j["C"] = cfg.C;
    j["kernel"] = kernel_to_json(cfg.kernel);
    j["tolerance"] = cfg.tolerance;
    j["max_passes"] = cfg.max_passes;
    return j;
}

TrainConfig train_config_from_json(const json& j) {
    TrainConfig cfg;
    cfg.C = j.at("C").get<double>();
    cfg.kernel = kernel_from_json(j.at("kernel"));
    cfg.tolerance = j.at("tolerance").get<double>();
    cfg.max_passes = j.at("max_passes").get<long>();
    return cfg;
}

constexpr int kModelFormatVersion = 1;

}  // namespace

std::string domain_to_json_string(const FeatureDomain& d) { return domain_to_json(d).dump(); }

std::vector<FeatureDomain> load_domains(const std::string& path) {
    json j;
    try {
        j = json::parse(read_text_file(path));
    } catch (const json::exception& e) {
        throw std::runtime_error(path + ": corrupt domain file: " + e.what());
    }
    std::vector<FeatureDomain> out;
    for (const auto& item : j) out.push_back(domain_from_json(item));
    return out;
}

void save_domains(const std::vector<FeatureDomain>& domains, const std::string& path) {
    json j = json::array();
    for (const auto& d : domains) j.push_back(domain_to_json(d));
    write_text_file(path, j.dump(2) + "\n");
}

// ---------------------------------------------------------------------------
// Models

void save_model(const TrainedModel& m, const std::string& path) {
    json j;
    j["format_version"] = kModelFormatVersion;
    if (m.is_linear()) {
        const LinearModel& lin = m.linear();
        j["kind"] = "linear";
        j["weights"] = lin.weights;
        j["bias"] = lin.bias;
        j["mask"] = mask_to_json(lin.mask);
    } else {
        const KernelModel& km = m.kernel_expansion();
        j["kind"] = "kernel";
        json svs = json::array();
        for (std::size_t i = 0; i < km.support_vectors.rows; ++i) {
            const auto row = km.support_vectors.row(i);
            svs.push_back(std::vector<double>(row.begin(), row.end()));
        }
        j["support_vectors"] = std::move(svs);
        j["dual_coeffs"] = km.dual_coeffs;
        j["bias"] = km.bias;
        j["kernel"] = kernel_to_json(km.kernel);
        j["mask"] = mask_to_json(km.mask);
    }
    j["train_config"] = train_config_to_json(m.config);
    j["converged"] = m.converged;
    write_text_file(path, j.dump(2) + "\n");
}

TrainedModel load_model(const std::string& path) {
    json j;
    try {
        j = json::parse(read_text_file(path));
    } catch (const json::exception& e) {
        throw std::runtime_error(path + ": corrupt model file: " + e.what());
    }
    try {
        const int version = j.at("format_version").get<int>();
        if (version != kModelFormatVersion)
            throw std::runtime_error("unsupported model format version " + std::to_string(version));
        TrainedModel out;
        out.config = train_config_from_json(j.at("train_config"));
        out.converged = j.value("converged", true);
        const std::string kind = j.at("kind").get<std::string>();
        if (kind == "linear") {
            LinearModel lin;
            lin.weights = j.at("weights").get<std::vector<double>>();
            lin.bias = j.at("bias").get<double>();
            lin.mask = mask_from_json(j.at("mask"));
            out.model = std::move(lin);
        } else if (kind == "kernel") {
            KernelModel km;
            km.dual_coeffs = j.at("dual_coeffs").get<std::vector<double>>();
            km.bias = j.at("bias").get<double>();
            km.kernel = kernel_from_json(j.at("kernel"));
            km.mask = mask_from_json(j.at("mask"));
            for (const auto& row : j.at("support_vectors")) {
                const auto vals = row.get<std::vector<double>>();
                km.support_vectors.push_row(vals);
            }
            if (km.support_vectors.rows != km.dual_coeffs.size())
                throw std::runtime_error("support vector / coefficient count mismatch");
            out.model = std::move(km);
        } else {
            throw std::runtime_error("unknown model kind '" + kind + "'");
        }
        return out;
    } catch (const json::exception& e) {
        throw std::runtime_error(path + ": corrupt model file: " + e.what());
    }
}

// ---------------------------------------------------------------------------
// Masks

void save_mask_json(const FeatureMask& mask, const std::vector<std::string>& feature_names,
                    const std::string& path) {
    json j;
    j["bits"] = mask_to_json(mask);
    json names = json::array();
    for (std::size_t i : mask.selected_indices()) {
        if (i < feature_names.size())
            names.push_back(feature_names[i]);
        else
            names.push_back("f" + std::to_string(i + 1));
    }
    j["selected_features"] = std::move(names);
    write_text_file(path, j.dump(2) + "\n");
}

FeatureMask load_mask_json(const std::string& path) {
    json j;
    try {
        j = json::parse(read_text_file(path));
    } catch (const json::exception& e) {
        throw std::runtime_error(path + ": corrupt mask file: " + e.what());
    }
    return mask_from_json(j.at("bits"));
}

// ---------------------------------------------------------------------------
// Attack results

namespace {
const char* init_name(InitKind k) {
    switch (k) {
        case InitKind::self: return "self";
        case InitKind::nearest_legit: return "nearest-legitimate";
        default: return "none";
    }
}
}  // namespace

void save_attack_results_csv(const std::vector<EvasionResult>& results, const std::string& path) {
    std::string out = "sample,cost,g_value,evaded,init,iterations\n";
    for (std::size_t i = 0; i < results.size(); ++i) {
        const auto& r = results[i];
        out += std::to_string(i);
        out += ',';
        out += format_double(r.cost);
        out += ',';
        out += format_double(r.g_value);
        out += ',';
        out += r.evaded ? '1' : '0';
        out += ',';
        out += init_name(r.init_used);
        out += ',';
        out += std::to_string(r.iterations);
        out += '\n';
    }
    write_text_file(path, out);
}

void save_attack_trace_csv(const EvasionResult& result, const std::string& path) {
    std::string out = "iteration,cost,g,phase\n";
    for (std::size_t i = 0; i < result.trajectory.size(); ++i) {
        const auto& t = result.trajectory[i];
        out += std::to_string(i);
        out += ',';
        out += format_double(t.cost);
        out += ',';
        out += format_double(t.g);
        out += ',';
        out += t.phase == 0 ? "boundary" : "cost";
        out += '\n';
    }
    write_text_file(path, out);
}

// ---------------------------------------------------------------------------
// Curves and comparison reports

void save_curve_csv(const SecurityCurve& curve, const std::string& path) {
    std::string out = "knowledge,budget,tp_mean,tp_std,n_repeats\n";
    const char* kn = curve.knowledge == Knowledge::perfect ? "pk" : "lk";
    for (const auto& p : curve.points) {
        out += kn;
        out += ',';
        out += format_double(p.budget);
        out += ',';
        out += format_double(p.tp_mean);
        out += ',';
        out += format_double(p.tp_std);
        out += ',';
        out += std::to_string(p.n_repeats);
        out += '\n';
    }
    write_text_file(path, out);
}

void save_compare_csv(const CompareReport& report, const std::string& path) {
    std::string out = "arm,knowledge,budget,tp_mean,tp_std,n_repeats,t_statistic\n";
    for (const CompareArm* arm : {&report.adversarial, &report.traditional}) {
        const char* kn = arm->curve.knowledge == Knowledge::perfect ? "pk" : "lk";
        for (std::size_t b = 0; b < arm->curve.points.size(); ++b) {
            const auto& p = arm->curve.points[b];
            out += arm->name;
            out += ',';
            out += kn;
            out += ',';
            out += format_double(p.budget);
            out += ',';
            out += format_double(p.tp_mean);
            out += ',';
            out += format_double(p.tp_std);
            out += ',';
            out += std::to_string(p.n_repeats);
            out += ',';
            out += format_double(report.t_statistic[b]);
            out += '\n';
        }
    }
    write_text_file(path, out);
}

namespace {

json curve_to_json(const SecurityCurve& curve) {
    json j;
    j["knowledge"] = curve.knowledge == Knowledge::perfect ? "pk" : "lk";
    j["mask"] = mask_to_json(curve.mask);
    json pts = json::array();
    for (const auto& p : curve.points) {
        json q;
        q["budget"] = p.budget;
        q["tp_mean"] = p.tp_mean;
        q["tp_std"] = p.tp_std;
        q["n_repeats"] = p.n_repeats;
        q["degraded"] = p.degraded;
        pts.push_back(std::move(q));
    }
    j["points"] = std::move(pts);
    return j;
}

json trace_to_json(const SelectionTrace& trace) {
    json recs = json::array();
    for (const auto& r : trace.records) {
        json q;
        q["iteration"] = r.iteration;
        q["candidate"] = r.feature;
        q["G"] = r.G;
        q["S"] = r.S;
        q["lambda_prime"] = r.lambda_prime;
        q["chosen"] = r.chosen;
        recs.push_back(std::move(q));
    }
    json j;
    j["records"] = std::move(recs);
    j["final_mask"] = mask_to_json(trace.final_mask);
    return j;
}

json arm_to_json(const CompareArm& arm) {
    json j;
    j["name"] = arm.name;
    j["curve"] = curve_to_json(arm.curve);
    j["budget0_tp"] = arm.budget0_tp;
    j["hardness"] = arm.hardness;
    json masks = json::array();
    for (const auto& m : arm.masks) masks.push_back(mask_to_json(m));
    j["masks"] = std::move(masks);
    json sizes = json::array();
    for (const auto& s : arm.size_summary) {
        json q;
        q["subset_size"] = s.subset_size;
        q["G"] = s.g_mean;
        q["S"] = s.s_mean;
        sizes.push_back(std::move(q));
    }
    j["by_subset_size"] = std::move(sizes);
    json traces = json::array();
    for (const auto& t : arm.traces) traces.push_back(trace_to_json(t));
    j["traces"] = std::move(traces);
    return j;
}

}  // namespace

std::string compare_report_to_json(const CompareReport& report) {
    json j;
    j["budgets"] = report.budgets;
    j["repeats"] = report.repeats;
    j["t_statistic"] = report.t_statistic;
    j["adversarial"] = arm_to_json(report.adversarial);
    j["traditional"] = arm_to_json(report.traditional);
    return j.dump(2) + "\n";
}

std::string curve_summary_json(const SecurityCurve& curve, const std::string& config_json) {
    json j;
    j["curve"] = curve_to_json(curve);
    if (!config_json.empty()) j["config"] = json::parse(config_json);
    return j.dump(2) + "\n";
}

}  // namespace advsel
