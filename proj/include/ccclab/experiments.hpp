#pragma once

#include "ccclab/config.hpp"
#include "ccclab/model.hpp"
#include "ccclab/realization.hpp"

#include <memory>
#include <string>
#include <utility>
#include <vector>

namespace ccclab {

/// One pass/fail statement. Hard verdicts are exact invariants and decide the
/// exit code; soft ones are statistical diagnostics.
struct Verdict {
    std::string experiment;
    std::string name;
    bool passed = false;
    bool hard = true;
    double value = 0.0;
    std::string detail;
};

struct ExperimentOutput {
    Json summary = Json::object();
    std::vector<Verdict> verdicts;
    /// (file name, CSV text)
    std::vector<std::pair<std::string, std::string>> files;
};

/// Per-ensemble accumulator for one configured experiment.
class Experiment {
public:
    Experiment(std::string type, std::string name) : type_(std::move(type)), name_(std::move(name)) {}
    virtual ~Experiment() = default;

    const std::string& type() const { return type_; }
    const std::string& name() const { return name_; }
    virtual bool needs_vectors() const { return true; }

    /// Same parameters, nothing accumulated.
    virtual std::unique_ptr<Experiment> fresh() const = 0;
    virtual void add(const Realization& r) = 0;
    virtual void merge(const Experiment& other) = 0;
    virtual ExperimentOutput finish() const = 0;

protected:
    Verdict verdict(std::string name, bool passed, double value, std::string detail = {}, bool hard = true) const;

private:
    std::string type_;
    std::string name_;
};

/// Validates the block (SchemaError on any problem) and builds an empty accumulator.
std::unique_ptr<Experiment> make_experiment(const Json& block, const LatticeSpec& lattice,
                                            const DisorderSpec& disorder, const std::string& where);

/// Names accepted in an experiment's "type" field.
const std::vector<std::string>& experiment_types();

/// Fixed-format number for CSV and logs: 17 significant digits.
std::string format_number(double x);

}  // namespace ccclab
