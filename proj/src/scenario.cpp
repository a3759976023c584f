/*
 Copyright 2026 The smpc_lab Authors

 Licensed under the Apache License, Version 2.0 (the "License");
 you may not use this file except in compliance with the License.
 You may obtain a copy of the License at

      https://www.apache.org/licenses/LICENSE-2.0

 Unless required by applicable law or agreed to in writing, software
 distributed under the License is distributed on an "AS IS" BASIS,
 WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 See the License for the specific language governing permissions and
 limitations under the License.
*/

#include "smpc_lab/scenario.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "smpc_lab/models.hpp"

namespace smpc_lab {

using nlohmann::json;

namespace {

[[noreturn]] void invalid(const std::string& field, const std::string& why) {
    throw Error(ErrorCode::ValidationError, field + ": " + why);
}

// Object view that remembers which keys were read so that leftovers can be
// reported as unknown.
class Fields {
public:
    Fields(const json& obj, std::string path) : obj_(obj), path_(std::move(path)) {
        if (!obj_.is_object()) invalid(path_.empty() ? "scenario" : path_, "expected an object");
    }

    std::string field(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

    const json* get(const std::string& key) {
        used_.insert(key);
        auto it = obj_.find(key);
        return it == obj_.end() ? nullptr : &*it;
    }

    const json& require(const std::string& key) {
        const json* v = get(key);
        if (!v) invalid(field(key), "required field is missing");
        return *v;
    }

    void finish() const {
        for (auto it = obj_.begin(); it != obj_.end(); ++it) {
            if (!used_.count(it.key())) throw Error(ErrorCode::UnknownKey, "unknown key '" + field(it.key()) + "'");
        }
    }

private:
    const json& obj_;
    std::string path_;
    std::set<std::string> used_;
};

double as_number(const json& v, const std::string& field) {
    if (!v.is_number()) invalid(field, "expected a number");
    const double d = v.get<double>();
    if (!std::isfinite(d)) invalid(field, "expected a finite number");
    return d;
}

double as_positive(const json& v, const std::string& field) {
    const double d = as_number(v, field);
    if (!(d > 0.0)) invalid(field, "must be positive");
    return d;
}

std::uint64_t as_unsigned(const json& v, const std::string& field) {
    if (!v.is_number_integer() || (v.is_number_integer() && !v.is_number_unsigned() && v.get<long long>() < 0)) {
        invalid(field, "expected a non-negative integer");
    }
    return v.get<std::uint64_t>();
}

bool as_bool(const json& v, const std::string& field) {
    if (!v.is_boolean()) invalid(field, "expected true or false");
    return v.get<bool>();
}

std::string as_string(const json& v, const std::string& field) {
    if (!v.is_string()) invalid(field, "expected a string");
    return v.get<std::string>();
}

std::vector<double> as_numbers(const json& v, const std::string& field) {
    if (v.is_number()) return {as_number(v, field)};
    if (!v.is_array()) invalid(field, "expected a number or an array of numbers");
    std::vector<double> out;
    for (std::size_t i = 0; i < v.size(); ++i) out.push_back(as_number(v[i], field + "[" + std::to_string(i) + "]"));
    return out;
}

Vector as_vector(const json& v, const std::string& field) {
    const std::vector<double> xs = as_numbers(v, field);
    if (xs.empty()) invalid(field, "must not be empty");
    return Eigen::Map<const Vector>(xs.data(), static_cast<Eigen::Index>(xs.size()));
}

// A number is read as a 1x1 matrix; otherwise an array of equally long rows.
Matrix as_matrix(const json& v, const std::string& field) {
    if (v.is_number()) return Matrix::Constant(1, 1, as_number(v, field));
    if (!v.is_array() || v.empty()) invalid(field, "expected a number or a non-empty array of rows");
    const std::size_t rows = v.size();
    std::size_t cols = 0;
    Matrix M;
    for (std::size_t i = 0; i < rows; ++i) {
        const std::string row_field = field + "[" + std::to_string(i) + "]";
        if (!v[i].is_array()) invalid(row_field, "expected an array of numbers");
        if (i == 0) {
            cols = v[i].size();
            M.resize(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
        }
        if (v[i].size() != cols) invalid(row_field, "rows must have equal length");
        for (std::size_t j = 0; j < cols; ++j) {
            M(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                as_number(v[i][j], row_field + "[" + std::to_string(j) + "]");
        }
    }
    return M;
}

std::vector<std::vector<double>> as_coefficients(const json& v, const std::string& field) {
    if (!v.is_array()) invalid(field, "expected an array of coefficient rows");
    std::vector<std::vector<double>> out;
    for (std::size_t i = 0; i < v.size(); ++i) out.push_back(as_numbers(v[i], field + "[" + std::to_string(i) + "]"));
    return out;
}

Verdict verdict_from_string(const std::string& s, const std::string& field) {
    if (s == "STABLE_WITHIN_BOUND") return Verdict::StableWithinBound;
    if (s == "RATE_ONLY") return Verdict::RateOnly;
    if (s == "BLOWUP_SUSPECTED") return Verdict::BlowupSuspected;
    invalid(field, "unknown verdict '" + s + "'");
}

ProbeObservable observable_from_string(const std::string& s, const std::string& field) {
    if (s == "control_drift") return ProbeObservable::ControlDrift;
    if (s == "drift_norm") return ProbeObservable::DriftNorm;
    if (s == "state_norm") return ProbeObservable::StateNorm;
    invalid(field, "unknown observable '" + s + "'");
}

AnalysisRequest parse_analysis(const json& v, const std::string& path) {
    Fields f(v, path);
    const std::string type = as_string(f.require("type"), f.field("type"));
    AnalysisRequest out;
    if (type == "mean_square") {
        MeanSquareAnalysis a;
        try {
            if (auto* x = f.get("theorem")) a.theorem = theorem_from_string(as_string(*x, f.field("theorem")));
        } catch (const Error& e) {
            if (e.code() == ErrorCode::ValidationError) invalid(f.field("theorem"), "expected T2_1, T2_2 or T2_3");
            throw;
        }
        if (auto* x = f.get("K")) a.K = as_positive(*x, f.field("K"));
        if (auto* x = f.get("L")) a.L = as_number(*x, f.field("L"));
        if (auto* x = f.get("fit_window")) {
            const std::vector<double> w = as_numbers(*x, f.field("fit_window"));
            if (w.size() != 2 || !(w[0] < w[1])) invalid(f.field("fit_window"), "expected [t_a, t_b] with t_a < t_b");
            a.fit_t_a = w[0];
            a.fit_t_b = w[1];
        }
        if (auto* x = f.get("require_verdict")) {
            a.require_verdict = verdict_from_string(as_string(*x, f.field("require_verdict")), f.field("require_verdict"));
        }
        if (auto* x = f.get("require_rate_at_most")) a.require_rate_at_most = as_number(*x, f.field("require_rate_at_most"));
        out = a;
    } else if (type == "riccati_convergence") {
        RiccatiAnalysis a;
        if (auto* x = f.get("horizon")) a.horizon = as_positive(*x, f.field("horizon"));
        if (auto* x = f.get("require_bound")) a.require_bound = as_bool(*x, f.field("require_bound"));
        out = a;
    } else if (type == "cost") {
        CostAnalysis a;
        if (auto* x = f.get("horizon")) a.horizon = as_positive(*x, f.field("horizon"));
        if (auto* x = f.get("monte_carlo")) a.monte_carlo = as_bool(*x, f.field("monte_carlo"));
        out = a;
    } else if (type == "gap_study") {
        GapAnalysis a;
        a.gaps = as_numbers(f.require("gaps"), f.field("gaps"));
        if (a.gaps.empty()) invalid(f.field("gaps"), "must not be empty");
        for (double g : a.gaps) {
            if (!(g > 0.0)) invalid(f.field("gaps"), "gaps must be positive");
        }
        if (auto* x = f.get("require_decreasing")) a.require_decreasing = as_bool(*x, f.field("require_decreasing"));
        out = a;
    } else if (type == "blowup") {
        BlowupAnalysis a;
        a.probe_time = as_positive(f.require("probe_time"), f.field("probe_time"));
        if (auto* x = f.get("observables")) {
            if (!x->is_array() || x->empty()) invalid(f.field("observables"), "expected a non-empty array");
            a.requests.clear();
            for (std::size_t i = 0; i < x->size(); ++i) {
                Fields o((*x)[i], f.field("observables") + "[" + std::to_string(i) + "]");
                ProbeRequest r;
                r.observable = observable_from_string(as_string(o.require("observable"), o.field("observable")),
                                                      o.field("observable"));
                if (auto* p = o.get("order")) r.order = as_positive(*p, o.field("order"));
                o.finish();
                a.requests.push_back(r);
            }
        }
        if (auto* x = f.get("sizes")) {
            a.sizes.clear();
            for (double s : as_numbers(*x, f.field("sizes"))) {
                if (!(s >= 1.0) || s != std::floor(s)) invalid(f.field("sizes"), "sizes must be positive integers");
                if (!a.sizes.empty() && !(static_cast<std::size_t>(s) > a.sizes.back())) {
                    invalid(f.field("sizes"), "sizes must be increasing");
                }
                a.sizes.push_back(static_cast<std::size_t>(s));
            }
            if (a.sizes.empty()) invalid(f.field("sizes"), "must not be empty");
        }
        if (auto* x = f.get("expect_flag")) a.expect_flag = as_bool(*x, f.field("expect_flag"));
        out = a;
    } else {
        invalid(f.field("type"), "unknown analysis '" + type + "'");
    }
    f.finish();
    return out;
}

std::string locate(const std::string& text, std::size_t byte) {
    std::size_t line = 1, column = 1;
    const std::size_t end = std::min(byte > 0 ? byte - 1 : 0, text.size());
    for (std::size_t i = 0; i < end; ++i) {
        if (text[i] == '\n') {
            ++line;
            column = 1;
        } else {
            ++column;
        }
    }
    return "line " + std::to_string(line) + ", column " + std::to_string(column);
}

} // namespace

RegisteredModel registered_model(const std::string& name) {
    if (name == "example_2_1") {
        return {name, models::exponential_example(), Matrix::Constant(1, 1, 2.5), Matrix::Constant(1, 1, 1.0)};
    }
    if (name == "example_2_2") {
        return {name, models::quadratic_example(), Matrix::Constant(1, 1, 1.0), Matrix::Constant(1, 1, 1.0 / 3.0)};
    }
    invalid("model", "unknown built-in model '" + name + "'");
}

std::vector<std::string> registered_model_names() { return {"example_2_1", "example_2_2"}; }

ControllerKind controller_kind_from_string(const std::string& name) {
    if (name == "smpc") return ControllerKind::Smpc;
    if (name == "rhc") return ControllerKind::Rhc;
    if (name == "static_are") return ControllerKind::StaticAre;
    if (name == "open_loop") return ControllerKind::OpenLoop;
    invalid("mode", "expected smpc, rhc, static_are or open_loop, got '" + name + "'");
}

CostWeights Scenario::weights(const Matrix& P_inf) const { return CostWeights(Q, R, G ? *G : P_inf); }

Scenario parse_scenario_text(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw Error(ErrorCode::ParseError, locate(text, e.byte) + ": " + e.what());
    }

    Fields root(doc, "");
    Scenario s;
    s.name = as_string(root.require("name"), "name");
    if (s.name.empty()) invalid("name", "must not be empty");

    {
        Fields m(root.require("model"), "model");
        s.model_type = as_string(m.require("type"), "model.type");
        if (s.model_type == "linear") {
            LinearPlant plant{as_matrix(m.require("A"), "model.A"), as_matrix(m.require("B"), "model.B"),
                              as_matrix(m.require("C"), "model.C"), as_matrix(m.require("D"), "model.D")};
            try {
                s.model = models::linear(plant);
            } catch (const Error& e) {
                invalid("model", e.what());
            }
        } else if (s.model_type == "polynomial") {
            try {
                s.model = models::polynomial(as_coefficients(m.require("drift"), "model.drift"),
                                             as_coefficients(m.require("diffusion"), "model.diffusion"));
            } catch (const Error& e) {
                if (e.code() != ErrorCode::ValidationError) invalid("model", e.what());
                throw;
            }
        } else {
            RegisteredModel reg = registered_model(s.model_type);
            s.model = std::move(reg.model);
            s.Q = reg.Q;
            s.R = reg.R;
        }
        m.finish();
    }

    const LinearPlant& plant = s.model.linearization;
    if (const json* w = root.get("weights")) {
        Fields f(*w, "weights");
        if (const json* q = f.get("Q")) s.Q = as_matrix(*q, "weights.Q");
        if (const json* r = f.get("R")) s.R = as_matrix(*r, "weights.R");
        if (const json* g = f.get("G")) {
            if (g->is_string()) {
                if (g->get<std::string>() != "P_inf") invalid("weights.G", "expected a matrix or \"P_inf\"");
            } else {
                s.G = as_matrix(*g, "weights.G");
            }
        }
        f.finish();
    }
    if (s.Q.size() == 0) invalid("weights.Q", "required for model type '" + s.model_type + "'");
    if (s.R.size() == 0) invalid("weights.R", "required for model type '" + s.model_type + "'");
    try {
        CostWeights(s.Q, s.R, s.G ? *s.G : Matrix::Zero(s.Q.rows(), s.Q.cols())).check_compatible(plant);
    } catch (const Error& e) {
        invalid("weights", e.what());
    }

    {
        Fields f(root.require("smpc"), "smpc");
        SmpcConfig& c = s.smpc;
        c.T = as_positive(f.require("T"), "smpc.T");
        c.tau = as_positive(f.require("tau"), "smpc.tau");
        if (c.tau > c.T) invalid("tau", "must not exceed T");
        c.h = f.get("h") ? as_positive(*f.get("h"), "smpc.h") : default_step(c.T, c.tau);
        c.x0 = as_vector(f.require("x0"), "smpc.x0");
        if (c.x0.size() != plant.n()) invalid("smpc.x0", "length does not match the model dimension");
        c.t_end = as_positive(f.require("t_end"), "smpc.t_end");
        c.n_paths = as_unsigned(f.require("n_paths"), "smpc.n_paths");
        if (const json* seed = f.get("seed")) c.seed = as_unsigned(*seed, "smpc.seed");
        f.finish();
        validate_config(c);
    }

    if (const json* mode = root.get("mode")) s.mode = controller_kind_from_string(as_string(*mode, "mode"));
    if (const json* r = root.get("exit_radius")) s.exit_radius = as_positive(*r, "exit_radius");
    if (const json* list = root.get("analyses")) {
        if (!list->is_array()) invalid("analyses", "expected an array");
        for (std::size_t i = 0; i < list->size(); ++i) {
            s.analyses.push_back(parse_analysis((*list)[i], "analyses[" + std::to_string(i) + "]"));
        }
    }
    s.output_dir = root.get("output_dir") ? as_string(*root.get("output_dir"), "output_dir") : "out/" + s.name;
    root.finish();
    return s;
}

Scenario parse_scenario(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::ParseError, "cannot open scenario file '" + path + "'");
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return parse_scenario_text(buffer.str());
}

void apply_overrides(Scenario& scenario, const ScenarioOverrides& o) {
    if (o.seed) scenario.smpc.seed = *o.seed;
    if (o.paths) scenario.smpc.n_paths = *o.paths;
    if (o.h) scenario.smpc.h = *o.h;
    if (o.out) scenario.output_dir = *o.out;
    validate_config(scenario.smpc);
}

} // namespace smpc_lab
