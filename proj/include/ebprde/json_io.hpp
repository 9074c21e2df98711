#pragma once

#include "ebprde/baselines.hpp"
#include "ebprde/eb_select.hpp"
#include "ebprde/fission.hpp"
#include "ebprde/lmm.hpp"
#include "ebprde/prior.hpp"

#include <json.hpp>

namespace ebprde {

using json = nlohmann::json;

// {"d": d, "units": [{"u": [...], "x": [[...], ...], "v": [...], "x_future": [[...], ...]}, ...]}
json design_to_json(const Design& design);
Design design_from_json(const json& j);

// {"y": [[...], ...], "y_future": [[...], ...] | null}
json dataset_to_json(const Dataset& data);
Dataset dataset_from_json(const json& j);

// {"kind": "...", "params": {...}}
json prior_to_json(const Prior& g);
Prior prior_from_json(const json& j);

json risk_to_json(const RiskBreakdown& r);
json selection_to_json(const SelectionResult& s);
json emfit_to_json(const EmFit& em);

// reuse-set size histogram with D_n and IF_n
json plan_summary_json(const FissionPlan& plan);

}  // namespace ebprde
