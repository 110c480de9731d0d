#pragma once

// Registry of identity checks run by `qhahn verify`.

#include "qhahn/rates.hpp"

#include <json.hpp>

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace qhahn::verify {

struct Context {
    ModelParams params = ModelParams::from_qs(0.6, 0.5, 0.2, 0.1);
    int cap = 8;
    double tol = 1e-14;  // series cutoff inside operators
    std::uint64_t seed = 20240601;
    std::size_t events = 1'000'000;
};

struct CheckResult {
    std::string check_id;
    double residual = 0.0;
    double tolerance = 0.0;
    bool pass = false;
    bool acceptance = true;  // false: reported only
    nlohmann::json params;
    nlohmann::json details;
};

struct Check {
    std::string id;
    bool acceptance;
    std::string description;
    std::function<CheckResult(const Context&)> run;
};

const std::vector<Check>& registry();

/// Runs the checks whose id is in `only` (all when empty) on up to `jobs`
/// threads; results keep registry order. Numeric failures inside a check are
/// rethrown as CheckFailure.
std::vector<CheckResult> run(const Context& ctx, const std::vector<std::string>& only = {}, unsigned jobs = 1);

class CheckFailure : public std::runtime_error {
public:
    CheckFailure(const std::string& id, const std::string& what) : std::runtime_error(id + ": " + what), id_(id) {}
    const std::string& check_id() const noexcept { return id_; }

private:
    std::string id_;
};

nlohmann::json to_json(const CheckResult& r);
nlohmann::json params_json(const ModelParams& p);

}  // namespace qhahn::verify
