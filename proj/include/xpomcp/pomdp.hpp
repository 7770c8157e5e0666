#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "xpomcp/rng.hpp"

namespace xpomcp {

// Opaque hidden-state encoding. Each model documents its own packing.
using State = std::uint64_t;

struct StepResult {
    State next = 0;
    int observation = 0;
    double reward = 0.0;
    bool terminal = false;
};

// Named probability variables exposed to rules (e.g. p_left/p_right,
// p_0/p_1/p_2 of the current segment). Keys are sorted, values sum to 1.
using BeliefProjection = std::map<std::string, double>;

// Black-box simulator contract. Models are immutable after construction and
// safely shareable; all randomness flows through caller-owned Rng streams.
class PomdpModel {
public:
    virtual ~PomdpModel() = default;

    virtual std::string id() const = 0;
    virtual int action_count() const = 0;
    virtual int observation_count() const = 0;
    virtual double discount() const = 0;

    // Horizon cap for one run (Tiger: step budget; velocity regulation:
    // number of subsegments).
    virtual int horizon() const = 0;

    virtual State sample_initial_state(Rng& rng) const = 0;

    // Must not be called on a terminal state; throws ContractError on an
    // out-of-range action.
    virtual StepResult step(State state, int action, Rng& rng) const = 0;

    // Projects a particle multiset onto the named probability variables.
    // Throws ContractError on an empty particle set.
    virtual BeliefProjection belief_projection(
        const std::vector<State>& particles) const = 0;

    // Local perturbation used by particle reinvigoration. Default: resample
    // the survivor unchanged.
    virtual State reinvigorate(State survivor, Rng& rng) const {
        (void)rng;
        return survivor;
    }

    // Model parameters as JSON text (stable key order) for trace headers.
    virtual std::string params_json() const = 0;
};

// Builds one of the registered models from its id with canonical defaults.
// Optional JSON config text overrides parameters.
std::shared_ptr<const PomdpModel> make_model(const std::string& id,
                                             const std::string& config_json = "");

// FNV-1a over the parameter JSON, used as the trace header's params hash.
std::string params_hash(const std::string& params_json);

}  // namespace xpomcp
