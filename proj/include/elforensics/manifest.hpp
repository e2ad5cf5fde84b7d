#pragma once

#include <string>
#include <vector>

#include "elforensics/dataset.hpp"
#include "elforensics/report_json.hpp"
#include "elforensics/version.hpp"

namespace elforensics {

// Sidecar written next to every CLI output. `config` echoes every resolved
// option, including a seed that was picked at random, so the run can be
// repeated exactly.
struct RunManifest {
    std::string command;
    Json config = Json::object();
    std::vector<std::pair<std::string, std::string>> inputs;  // path, sha256
    std::vector<std::string> outputs;

    Json to_json() const {
        Json in = Json::array();
        for (const auto& [path, digest] : inputs) in.push_back(Json{{"path", path}, {"sha256", digest}});
        return Json{{"command", command},
                    {"tool_version", std::string(kVersion)},
                    {"config", config},
                    {"inputs", std::move(in)},
                    {"outputs", outputs}};
    }

    // Writes `<out>.manifest.json` and returns its path.
    std::string write_beside(const std::string& out) {
        const std::string path = out + ".manifest.json";
        outputs.push_back(path);
        detail::write_file(path, dump(to_json()));
        return path;
    }
};

}  // namespace elforensics
