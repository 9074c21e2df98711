#include "ebprde/json_io.hpp"

#include <map>
#include <stdexcept>

namespace ebprde {

namespace {

json rows(const std::vector<double>& flat, std::size_t count, std::size_t d)
{
    json out = json::array();
    for (std::size_t k = 0; k < count; ++k)
        out.push_back(std::vector<double>(flat.begin() + static_cast<long>(k * d), flat.begin() + static_cast<long>((k + 1) * d)));
    return out;
}

std::vector<double> flatten(const json& j, std::size_t count, std::size_t d, const char* what)
{
    std::vector<double> out;
    if (d == 0 && (j.is_null() || j.empty())) return out;
    if (!j.is_array() || j.size() != count) throw std::invalid_argument(std::string("design json: bad ") + what + " block");
    for (const auto& row : j) {
        if (!row.is_array() || row.size() != d) throw std::invalid_argument(std::string("design json: bad ") + what + " row");
        for (const auto& x : row) out.push_back(x.get<double>());
    }
    return out;
}

}  // namespace

json design_to_json(const Design& design)
{
    json units = json::array();
    for (const auto& u : design.units) {
        json ju;
        ju["u"] = u.u;
        ju["v"] = u.v;
        ju["x"] = rows(u.x, u.u.size(), design.d);
        ju["x_future"] = rows(u.x_future, u.v.size(), design.d);
        units.push_back(std::move(ju));
    }
    return json{{"n", design.n()}, {"d", design.d}, {"units", std::move(units)}};
}

Design design_from_json(const json& j)
{
    const std::size_t d = j.value("d", std::size_t{0});
    std::vector<Unit> units;
    for (const auto& ju : j.at("units")) {
        Unit u;
        u.u = ju.at("u").get<std::vector<double>>();
        u.v = ju.at("v").get<std::vector<double>>();
        u.x = flatten(ju.contains("x") ? ju["x"] : json(), u.u.size(), d, "x");
        u.x_future = flatten(ju.contains("x_future") ? ju["x_future"] : json(), u.v.size(), d, "x_future");
        units.push_back(std::move(u));
    }
    if (j.contains("n") && j["n"].get<std::size_t>() != units.size()) throw std::invalid_argument("design json: n disagrees with units");
    return make_design(d, std::move(units));
}

json dataset_to_json(const Dataset& data)
{
    json j;
    j["y"] = data.y;
    j["y_future"] = data.y_future ? json(*data.y_future) : json(nullptr);
    return j;
}

Dataset dataset_from_json(const json& j)
{
    Dataset data;
    data.y = j.at("y").get<std::vector<std::vector<double>>>();
    if (j.contains("y_future") && !j["y_future"].is_null())
        data.y_future = j["y_future"].get<std::vector<std::vector<double>>>();
    return data;
}

json prior_to_json(const Prior& g)
{
    json params = json::object();
    if (const auto* p = std::get_if<SpikeSlabPrior>(&g)) {
        params = {{"eta", p->eta}, {"a", p->a}};
    } else if (const auto* p = std::get_if<GaussMixPrior>(&g)) {
        params = {{"weights", p->weights}, {"variances", p->variances}};
    } else if (const auto* p = std::get_if<DiscretePrior>(&g)) {
        params = {{"weights", p->weights}, {"support", p->support}};
    } else if (const auto* p = std::get_if<GaussianScalarPrior>(&g)) {
        params = {{"tau", p->tau}};
    }
    return json{{"kind", prior_kind(g)}, {"params", params}};
}

Prior prior_from_json(const json& j)
{
    const std::string kind = j.at("kind").get<std::string>();
    const json params = j.value("params", json::object());
    Prior g;
    if (kind == "uniform")
        g = UniformPrior{};
    else if (kind == "spike_slab")
        g = SpikeSlabPrior{params.at("eta").get<double>(), params.at("a").get<double>()};
    else if (kind == "gauss_mix")
        g = GaussMixPrior{params.at("weights").get<std::vector<double>>(), params.at("variances").get<std::vector<double>>()};
    else if (kind == "discrete")
        g = DiscretePrior{params.at("weights").get<std::vector<double>>(), params.at("support").get<std::vector<double>>()};
    else if (kind == "gaussian_scalar")
        g = GaussianScalarPrior{params.at("tau").get<double>()};
    else
        throw std::invalid_argument("prior json: unknown kind '" + kind + "'");
    validate_prior(g);
    return g;
}

json risk_to_json(const RiskBreakdown& r)
{
    return json{{"a_n", r.a_n},       {"r1_hat", r.r1_hat}, {"r2_hat", r.r2_hat}, {"total", r.total},
                {"h_used", r.h_used}, {"scarce_mode", r.scarce_mode}, {"D_n", r.D_n}, {"IF_n", r.IF_n}};
}

json selection_to_json(const SelectionResult& s)
{
    return json{{"g_hat", prior_to_json(s.g_hat)},
                {"risk_at_opt", risk_to_json(s.risk_at_opt)},
                {"trace", s.trace},
                {"iterations", s.iterations},
                {"converged", s.converged},
                {"no_improved_coordinates", s.no_improved_coordinates}};
}

json emfit_to_json(const EmFit& em)
{
    return json{{"weights", em.weights},
                {"variance_grid", em.variance_grid},
                {"loglik_trace", em.loglik_trace},
                {"iterations", em.iterations},
                {"converged", em.converged}};
}

json plan_summary_json(const FissionPlan& plan)
{
    std::map<std::size_t, std::size_t> hist;
    for (const auto& m : plan.members) ++hist[m.size()];
    json h = json::array();
    for (const auto& [size, count] : hist) h.push_back({{"size", size}, {"count", count}});
    return json{{"h", plan.h},
                {"kappa", plan.coords.size()},
                {"improved", plan.improved_count},
                {"D_n", plan.D_n},
                {"IF_n", plan.IF_n},
                {"dependency_sum", plan.dependency_sum},
                {"set_size_histogram", std::move(h)}};
}

}  // namespace ebprde
