#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "lfl/config.hpp"
#include "lfl/lab.hpp"

namespace lfl {

// Study names accepted by the experiment runner and the report renderer.
const std::vector<std::string>& study_names();

// Everything a report is rendered from. Experiments write it under data/ and
// `report` reads it back, so both paths render from the same bytes.
struct StudyData {
  std::string study;
  Config meta;  // study parameters; data/meta.txt
  std::vector<TrialRecord> trials;
  std::vector<TraceSeries> traces;
  std::vector<EncounterRecord> encounters;
  std::vector<TimingSample> timings;
  std::optional<PowerTable> power;
  std::optional<SoakResult> soak;
};

// Relative path -> file contents.
using FileSet = std::map<std::string, std::string>;

FileSet study_data_files(const StudyData& data);
StudyData parse_study_data(const FileSet& files);

// report.txt, tables/*.csv and plots/*.svg. Throws ValidationError("nothing to
// report") when the study carries no results.
FileSet render_report(const StudyData& data);

void write_files(const std::filesystem::path& dir, const FileSet& files);
// Every regular file under dir/data, keyed by its path relative to dir.
FileSet read_data_files(const std::filesystem::path& dir);

// Minimal SVG line chart.
struct PlotSeries {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
  std::string color;
  bool dashed = false;
};
std::string svg_line_plot(const std::string& title, const std::string& x_label, const std::string& y_label,
                          const std::vector<PlotSeries>& series);

}  // namespace lfl
