#include "xpomcp/pomdp.hpp"

#include <cstdio>

#include "xpomcp/errors.hpp"
#include "xpomcp/tiger.hpp"
#include "xpomcp/velocity.hpp"

#include <json.hpp>

namespace xpomcp {

std::shared_ptr<const PomdpModel> make_model(const std::string& id,
                                             const std::string& config_json) {
    nlohmann::json cfg = nlohmann::json::object();
    if (!config_json.empty()) {
        cfg = nlohmann::json::parse(config_json, nullptr, false);
        if (cfg.is_discarded())
            throw ParseError("model config is not valid JSON");
        if (!cfg.is_object())
            throw ValidationError("model config must be a JSON object");
    }
    if (id == "tiger") {
        return std::make_shared<TigerModel>(
            cfg.value("hear_accuracy", 0.85), cfg.value("reward_treasure", 10.0),
            cfg.value("reward_tiger", -100.0), cfg.value("reward_listen", -1.0),
            cfg.value("discount", 0.85), cfg.value("max_steps", 10));
    }
    if (id == "velocity-regulation" || id == "velreg") {
        auto table = VelocityRegulationModel::default_collision_table();
        if (cfg.contains("collision")) {
            const auto& rows = cfg.at("collision");
            if (!rows.is_array() || rows.size() != 3)
                throw ValidationError(
                    "model config 'collision' must be a 3x3 array");
            for (int f = 0; f < 3; ++f) {
                if (!rows[f].is_array() || rows[f].size() != 3)
                    throw ValidationError(
                        "model config 'collision' must be a 3x3 array");
                for (int a = 0; a < 3; ++a)
                    table[f][a] = rows[f][a].get<double>();
            }
        }
        auto m = std::make_shared<VelocityRegulationModel>(
            cfg.value("discount", 0.95), cfg.value("collision_penalty", -100.0),
            table);
        m->reinvigoration_noise = cfg.value("reinvigoration_noise", 0.1);
        return m;
    }
    throw ValidationError("unknown model id: " + id +
                          " (known: tiger, velocity-regulation)");
}

std::string params_hash(const std::string& params_json) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : params_json) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(h));
    return buf;
}

}  // namespace xpomcp
