#pragma once

#include <chrono>
#include <string>
#include <utility>
#include <vector>

#include "nodal/io.hpp"

namespace nodal {

/// One verified quantity: what was measured, the bound it was held to, and
/// the verdict.
struct CheckResult {
    std::string name;
    bool pass = false;
    double measured = 0.0;
    double bound = 0.0;
    std::string note;
};

/**
 * Machine-readable record of one CLI invocation: the command echo, a
 * digest of the inputs, the outputs, and one verdict per invariant of the
 * module that was exercised. Exit code 0 iff every check passed.
 */
struct RunReport {
    std::string command;
    std::string inputs_digest;
    io::json outputs = io::json::object();
    std::vector<CheckResult> checks;
    double wall_time_s = 0.0;

    void add(std::string name, bool pass, double measured, double bound, std::string note = {}) {
        checks.push_back(CheckResult{std::move(name), pass, measured, bound, std::move(note)});
    }

    bool all_passed() const {
        for (const CheckResult& c : checks)
            if (!c.pass) return false;
        return true;
    }

    io::json to_json() const {
        io::json jc = io::json::array();
        for (const CheckResult& c : checks) {
            io::json e{{"name", c.name}, {"pass", c.pass}, {"measured", c.measured},
                       {"bound", c.bound}};
            if (!c.note.empty()) e["note"] = c.note;
            jc.push_back(e);
        }
        return io::json{{"command", command},
                        {"inputs_digest", inputs_digest},
                        {"outputs", outputs},
                        {"checks", jc},
                        {"wall_time_s", wall_time_s}};
    }
};

class WallClock {
  public:
    WallClock() : start_(std::chrono::steady_clock::now()) {}
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

  private:
    std::chrono::steady_clock::time_point start_;
};

}  // namespace nodal
