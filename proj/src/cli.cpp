#include "cabfare/cli.hpp"

#include <CLI11.hpp>
#include <omp.h>
#include <spdlog/sinks/stdout_sinks.h>
#include <spdlog/spdlog.h>

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include "cabfare/analytics.hpp"
#include "cabfare/errors.hpp"
#include "cabfare/fare_query.hpp"
#include "cabfare/ingest.hpp"
#include "cabfare/mesh_index.hpp"
#include "cabfare/pricing.hpp"
#include "cabfare/record_file.hpp"
#include "cabfare/service.hpp"

namespace cabfare::cli {

namespace {

BoundingBox parse_bbox(const std::string& text) {
  std::vector<double> v;
  std::stringstream ss(text);
  std::string part;
  while (std::getline(ss, part, ',')) {
    try {
      std::size_t used = 0;
      v.push_back(std::stod(part, &used));
      if (used != part.size()) throw std::invalid_argument(part);
    } catch (const std::exception&) {
      throw CLI::ValidationError("--bbox", "expected south,west,north,east");
    }
  }
  if (v.size() != 4) throw CLI::ValidationError("--bbox", "expected south,west,north,east");
  BoundingBox b{{v[0], v[1]}, {v[2], v[3]}};
  if (!b.valid()) throw CLI::ValidationError("--bbox", "south/west must be below north/east");
  return b;
}

std::int64_t build_timestamp() {
  if (const char* epoch = std::getenv("SOURCE_DATE_EPOCH")) {
    try {
      return std::stoll(epoch);
    } catch (const std::exception&) {
      throw ConfigError("SOURCE_DATE_EPOCH is not an integer");
    }
  }
  return std::chrono::duration_cast<std::chrono::seconds>(
             std::chrono::system_clock::now().time_since_epoch())
      .count();
}

void use_stderr_logger() {
  auto logger = std::make_shared<spdlog::logger>(
      "cabfare", std::make_shared<spdlog::sinks::stderr_sink_mt>());
  logger->set_pattern("[%H:%M:%S.%e] [%^%l%$] %v");
  spdlog::set_default_logger(std::move(logger));
}

}  // namespace

int run(const std::vector<std::string>& argv) {
  use_stderr_logger();

  CLI::App app{"Yellow cab vs. Uber X fare comparison engine", "cabfare"};
  app.require_subcommand(1);
  int threads = 0;
  app.add_option("--threads", threads, "Cap on worker threads (0 = runtime default)")
      ->check(CLI::NonNegativeNumber);

  std::string bbox_text = "40.49,-74.27,40.92,-73.68";

  auto* ingest = app.add_subcommand("ingest", "Parse and validate trip CSV into a record file");
  std::string in_csv, fares_csv, schema_name = "foil", records_out;
  ingest->add_option("--input", in_csv, "Trip CSV (header row required)")->required();
  ingest->add_option("--fares", fares_csv, "Separate fare CSV to join on the schema's join_key");
  ingest->add_option("--schema", schema_name, "'foil' or a JSON column-mapping file")->capture_default_str();
  ingest->add_option("--bbox", bbox_text, "south,west,north,east")->capture_default_str();
  ingest->add_option("--out", records_out, "Output record file")->required();

  auto* build = app.add_subcommand("build-index", "Build the mesh index from a record file");
  std::string records_in, index_out;
  double cell_size = 100.0;
  build->add_option("--records", records_in)->required();
  build->add_option("--cell-size", cell_size, "Cell edge in meters")->capture_default_str()
      ->check(CLI::PositiveNumber);
  build->add_option("--bbox", bbox_text, "south,west,north,east")->capture_default_str();
  build->add_option("--out", index_out)->required();

  auto* query = app.add_subcommand("query", "Compare yellow and Uber X for one trip");
  std::string index_in, provider_cfg;
  double olat = 0, olon = 0, dlat = 0, dlon = 0;
  std::int32_t max_ring = kDefaultMaxRing;
  query->add_option("--index", index_in)->required();
  query->add_option("--olat", olat)->required();
  query->add_option("--olon", olon)->required();
  query->add_option("--dlat", dlat)->required();
  query->add_option("--dlon", dlon)->required();
  query->add_option("--provider-config", provider_cfg)->required();
  query->add_option("--max-ring", max_ring, "Neighborhood search cap in rings")->capture_default_str()
      ->check(CLI::PositiveNumber);

  auto* stats = app.add_subcommand("stats", "Batch analytics over an indexed corpus");
  std::string out_dir;
  StatsOptions opts;
  stats->add_option("--index", index_in)->required();
  stats->add_option("--provider-config", provider_cfg)->required();
  stats->add_option("--sample", opts.sample, "Fraction of trips in (0, 1]")->capture_default_str()
      ->check(CLI::Range(0.0, 1.0));
  stats->add_option("--seed", opts.seed, "Sampling seed")->capture_default_str();
  stats->add_option("--out-dir", out_dir)->required();
  stats->add_option("--bin-width", opts.curve_bin_usd, "Median-curve bin width (USD)")->capture_default_str()
      ->check(CLI::PositiveNumber);
  stats->add_option("--min-support", opts.curve_min_support, "Pairs needed per curve bin")->capture_default_str();
  stats->add_option("--raster-cell-size", opts.raster_cell_m, "Raster cell edge (m)")->capture_default_str()
      ->check(CLI::PositiveNumber);

  auto* serve_cmd = app.add_subcommand("serve", "Run the HTTP service");
  std::string config_path;
  serve_cmd->add_option("--config", config_path)->required();

  std::vector<std::string> args(argv.rbegin(), argv.rend());
  if (!args.empty()) args.pop_back();  // program name
  try {
    app.parse(args);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsageError;
  }
  if (threads > 0) omp_set_num_threads(threads);

  try {
    if (*ingest) {
      const auto bbox = parse_bbox(bbox_text);
      const Schema schema = Schema::load(schema_name);
      IngestResult result = fares_csv.empty() ? ingest_file(in_csv, schema, bbox)
                                              : join_fare(in_csv, fares_csv, schema, bbox);
      write_records(records_out, result.records);
      const std::string report = result.report.to_json().dump(2) + "\n";
      write_file(records_out + ".report.json", report);
      spdlog::info("ingest: {} rows read, {} kept", result.report.rows_read, result.report.rows_kept);
      std::cout << report;
    } else if (*build) {
      const auto bbox = parse_bbox(bbox_text);
      auto records = read_records(records_in);
      spdlog::info("build-index: {} records", records.size());
      const auto index = MeshIndex::build(std::move(records), MeshSpec(bbox, cell_size),
                                          build_timestamp());
      index.save(index_out);
      std::cout << nlohmann::json{{"trips", index.size()},
                                  {"non_empty_cells", index.non_empty_cells()},
                                  {"columns", index.spec().columns()},
                                  {"rows", index.spec().rows()},
                                  {"cell_size_m", index.spec().cell_size()},
                                  {"built_at", index.built_at()}}
                       .dump(2)
                << "\n";
    } else if (*query) {
      const auto index = MeshIndex::load(index_in);
      const auto provider = load_provider(provider_cfg);
      const auto result = compare(index, *provider, {olat, olon}, {dlat, dlon}, max_ring);
      std::cout << to_json(result).dump(2) << "\n";
    } else if (*stats) {
      const auto index = MeshIndex::load(index_in);
      const auto provider = load_provider(provider_cfg);
      spdlog::info("stats: {} trips, sample {}, seed {}", index.size(), opts.sample, opts.seed);
      const auto summary = compute_stats(index.trips(), index.spec(), *provider, opts);
      write_stats(summary, out_dir);
      std::cout << summary.summary.dump(2) << "\n";
    } else if (*serve_cmd) {
      return serve(ServiceConfig::load(config_path));
    }
  } catch (const CLI::ValidationError& e) {
    spdlog::error("{}", e.what());
    return kUsageError;
  } catch (const IoError& e) {
    spdlog::error("{}", e.what());
    return kIoError;
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return kDataError;
  }
  return kOk;
}

}  // namespace cabfare::cli
