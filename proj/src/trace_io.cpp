#include "fedrep/trace_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace fedrep {
namespace {

void append_mean_std(std::ostringstream& out, const std::vector<double>& xs) {
  double mean = 0.0;
  for (double x : xs) mean += x;
  mean /= static_cast<double>(xs.size());
  double var = 0.0;
  if (xs.size() > 1) {
    for (double x : xs) var += (x - mean) * (x - mean);
    var /= static_cast<double>(xs.size() - 1);
  }
  out << "," << format_double(mean) << "," << format_double(std::sqrt(var));
}

}  // namespace

std::string format_double(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  return buf;
}

std::string fedrep_trace_csv(const std::vector<FedTrace>& traces,
                             const std::vector<std::uint64_t>& seeds,
                             const std::string& algo_label) {
  std::ostringstream out;
  out << "schema_version," << kCsvSchemaVersion << "\n";
  out << "kind," << (algo_label.empty() ? "fedrep" : "baseline") << "\n";
  const std::string prefix = algo_label.empty() ? "" : algo_label + ",";
  const std::string header_prefix = algo_label.empty() ? "" : "algo,";
  for (Index rep = 0; rep < traces.size(); ++rep) {
    out << "replicate," << rep << ",seed," << seeds[rep] << "\n";
    out << header_prefix
        << "round,dist,pop_loss,emp_loss,sigma_min_sub,sigma_max_sub,"
           "rate_bound,f_norm,participants\n";
    for (const FedRound& r : traces[rep].rounds) {
      out << prefix << r.round << "," << format_double(r.dist) << ","
          << format_double(r.pop_loss) << "," << format_double(r.emp_loss)
          << "," << format_double(r.sigma_min_sub) << ","
          << format_double(r.sigma_max_sub) << ","
          << format_double(r.rate_bound) << "," << format_double(r.f_norm)
          << "," << r.participants << "\n";
    }
  }
  out << "summary,replicates," << traces.size() << "\n";
  out << "round,dist_mean,dist_std,pop_loss_mean,pop_loss_std,"
         "emp_loss_mean,emp_loss_std\n";
  const Index rounds = traces.front().rounds.size();
  for (Index t = 0; t < rounds; ++t) {
    std::vector<double> dist, pop, emp;
    for (const FedTrace& trace : traces) {
      dist.push_back(trace.rounds[t].dist);
      pop.push_back(trace.rounds[t].pop_loss);
      emp.push_back(trace.rounds[t].emp_loss);
    }
    out << traces.front().rounds[t].round;
    append_mean_std(out, dist);
    append_mean_std(out, pop);
    append_mean_std(out, emp);
    out << "\n";
  }
  return out.str();
}

std::string fullmeas_trace_csv(const std::vector<FullMeasTrace>& traces,
                               const std::vector<std::uint64_t>& seeds) {
  std::ostringstream out;
  out << "schema_version," << kCsvSchemaVersion << "\n";
  out << "kind,fullmeas\n";
  for (Index rep = 0; rep < traces.size(); ++rep) {
    out << "replicate," << rep << ",seed," << seeds[rep] << "\n";
    out << "round,loss,dist,sigma_min_r,sigma_max_r,grad_norm,"
           "contraction_ratio,rate_bound\n";
    for (const FullMeasRound& r : traces[rep].rounds) {
      out << r.round << "," << format_double(r.loss) << ","
          << format_double(r.dist) << "," << format_double(r.sigma_min_r)
          << "," << format_double(r.sigma_max_r) << ","
          << format_double(r.grad_norm) << ","
          << format_double(r.contraction_ratio) << ","
          << format_double(traces[rep].rate_bound) << "\n";
    }
  }
  out << "summary,replicates," << traces.size() << "\n";
  out << "round,loss_mean,loss_std,dist_mean,dist_std\n";
  const Index rounds = traces.front().rounds.size();
  for (Index t = 0; t < rounds; ++t) {
    std::vector<double> loss, dist;
    for (const FullMeasTrace& trace : traces) {
      loss.push_back(trace.rounds[t].loss);
      dist.push_back(trace.rounds[t].dist);
    }
    out << traces.front().rounds[t].round;
    append_mean_std(out, loss);
    append_mean_std(out, dist);
    out << "\n";
  }
  return out.str();
}

std::string new_client_csv(const std::vector<NewClientReport>& reports,
                           const std::vector<std::uint64_t>& seeds) {
  std::ostringstream out;
  out << "schema_version," << kCsvSchemaVersion << "\n";
  out << "kind,newclient\n";
  out << "replicate,seed,m_new,mse_fedrep,mse_fedavg_style,mse_local\n";
  std::vector<double> rep_mse, avg_mse, local_mse;
  for (Index i = 0; i < reports.size(); ++i) {
    const NewClientReport& r = reports[i];
    out << i << "," << seeds[i] << "," << r.m_new << ","
        << format_double(r.mse_fedrep) << ","
        << format_double(r.mse_fedavg_style) << ","
        << format_double(r.mse_local) << "\n";
    rep_mse.push_back(r.mse_fedrep);
    avg_mse.push_back(r.mse_fedavg_style);
    local_mse.push_back(r.mse_local);
  }
  out << "summary,median," << reports.front().m_new << ","
      << format_double(median_of(rep_mse)) << ","
      << format_double(median_of(avg_mse)) << ","
      << format_double(median_of(local_mse)) << "\n";
  return out.str();
}

double median_of(std::vector<double> values) {
  if (values.empty()) return std::nan("");
  std::sort(values.begin(), values.end());
  const Index mid = values.size() / 2;
  if (values.size() % 2 == 1) return values[mid];
  return 0.5 * (values[mid - 1] + values[mid]);
}

void write_file_atomic(const std::string& path, const std::string& content) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream file(tmp, std::ios::binary | std::ios::trunc);
    if (!file) throw ConfigError("cannot open output file " + tmp);
    file << content;
    if (!file) throw ConfigError("failed writing " + tmp);
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0) {
    throw ConfigError("failed atomic rename to " + path);
  }
}

}  // namespace fedrep
