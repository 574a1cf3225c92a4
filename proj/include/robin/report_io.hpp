#pragma once

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "robin/assembly.hpp"
#include "robin/resolvent.hpp"
#include "robin/spectral.hpp"

namespace robin {

/// Shortest round-trip decimal form, '.' separator regardless of locale; "nan"/"inf"/"-inf".
std::string format_double(double v);

/// Minimal CSV builder: fields never contain separators, so no quoting.
class CsvTable {
public:
    explicit CsvTable(std::vector<std::string> header);
    CsvTable& row();
    CsvTable& add(double v);
    CsvTable& add(long long v);
    CsvTable& add(const std::string& v);
    CsvTable& add(bool v) { return add(std::string(v ? "1" : "0")); }
    std::string str() const;

private:
    std::vector<std::string> header_;
    std::vector<std::vector<std::string>> rows_;
};

nlohmann::json to_json(const GridProvenance& g);
nlohmann::json to_json(const LayerGrid& grid);
nlohmann::json to_json(const TheoremConstants& c);
nlohmann::json to_json(const ResolventDiffReport& r);
nlohmann::json to_json(const RateFit& f);
nlohmann::json to_json(const SweepResult& s);
nlohmann::json to_json(const SpectrumReport& r);
nlohmann::json to_json(const WeakCouplingReport& r);
nlohmann::json to_json(const Trajectory& t);
nlohmann::json to_json(const PairedSpectra& p);

/// One row per epsilon: epsilon, norm_L2, bound_L2, norm_W1, bound_W1, lemma21_ratio, ... and slopes.
std::string sweep_csv(const SweepResult& s);
/// epsilon, re, im, residual, converged, below_threshold, in_enclosure
std::string spectrum_csv(const std::vector<SpectrumReport>& reports);
std::string weak_coupling_csv(const WeakCouplingReport& r);
std::string trajectory_csv(const Trajectory& t);

/// Writes to a temporary sibling and renames it into place.
void atomic_write(const std::string& path, const std::string& content);

/// JSON with a trailing newline, two-space indent.
std::string dump_json(const nlohmann::json& j);

} // namespace robin
