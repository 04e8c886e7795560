#pragma once

#include <nlohmann/json.hpp>

#include <cstdint>
#include <cstdio>
#include <string>
#include <string_view>

#include "sparsecity/errors.hpp"
#include "sparsecity/rng.hpp"

namespace sparsecity {

inline constexpr std::string_view kLibraryVersion = "1.0.0";

/// 64-bit FNV-1a, printed as 16 lowercase hex digits.
inline std::string fnv1a_hex(std::string_view bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

/// Reproducibility record attached to every output. `params` holds every
/// setting that affects the numbers produced (dimensions, seeds, law, solver
/// settings). Thread counts are deliberately absent: they never change output.
struct ExperimentManifest {
    std::string command;
    nlohmann::json params = nlohmann::json::object();

    /// JSON without the hash field; keys are sorted, so the dump is canonical.
    nlohmann::json body() const {
        return {{"format_version", 1},
                {"command", command},
                {"library_version", kLibraryVersion},
                {"rng", {{"name", CounterRng::name}, {"version", CounterRng::version}}},
                {"params", params}};
    }

    std::string hash() const { return fnv1a_hex(body().dump()); }

    nlohmann::json to_json() const {
        auto j = body();
        j["hash"] = hash();
        return j;
    }

    static ExperimentManifest from_json(const nlohmann::json& j) {
        if (j.at("format_version").get<int>() != 1)
            detail::fail<domain_error>("manifest: unsupported format_version");
        ExperimentManifest m{j.at("command").get<std::string>(), j.at("params")};
        if (j.contains("hash") && j.at("hash").get<std::string>() != m.hash())
            detail::fail<domain_error>("manifest: hash does not match contents");
        return m;
    }
};

}  // namespace sparsecity
