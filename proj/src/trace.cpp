#include "proxbound/trace.hpp"

#include <cmath>
#include <ostream>

namespace proxbound {

namespace {

std::string cell(double v) { return std::isnan(v) ? "nan" : format_real(v); }

}  // namespace

std::string to_string(Status s) { return s == Status::Converged ? "Converged" : "MaxIter"; }

void write_additive_csv(std::ostream& out, const IterationTrace& trace) {
  out << "k,phi,gnorm,descent_residual,certificate,elapsed_s\n";
  for (const auto& r : trace.rows) {
    out << r.k << ',' << cell(r.phi) << ',' << cell(r.gnorm) << ',' << cell(r.decrease_residual)
        << ',' << cell(r.certificate) << ',' << cell(r.elapsed_s) << '\n';
  }
}

void write_composite_csv(std::ostream& out, const IterationTrace& trace) {
  out << "k,phi,gnorm,t_accepted,backtracks,decrease_residual,certificate,certificate_sharp,"
         "elapsed_s\n";
  for (const auto& r : trace.rows) {
    out << r.k << ',' << cell(r.phi) << ',' << cell(r.gnorm) << ',' << cell(r.t) << ','
        << r.backtracks << ',' << cell(r.decrease_residual) << ',' << cell(r.certificate) << ','
        << cell(r.certificate_sharp) << ',' << cell(r.elapsed_s) << '\n';
  }
}

}  // namespace proxbound
