// Band for the dose-response data in data/lavelle_9aa.csv over log-dose in
// (-1.3, 0.8), compared with the unrestricted band.

#include <iomanip>
#include <iostream>

#include "bandcone/bandcone.hpp"

int main() {
  using namespace bandcone;
  const DatasetFile file = read_dataset_file(std::string(BANDCONE_DATA_DIR) + "/lavelle_9aa.csv");
  const FittedModel model = fit_logistic(file.data);

  const Region region = make_interval(-1.3, 0.8);
  const RegionSummary cone = summarize(region, model.fisher_inv);
  const CriticalValue restricted = critical_value(0.05, cone);
  const CriticalValue scheffe = critical_value(0.05, summarize(Unrestricted{}, model.fisher_inv));

  std::cout << std::fixed << std::setprecision(4) << "beta_hat = (" << model.beta_hat[0]
            << ", " << model.beta_hat[1] << ")\n"
            << "a = " << cone.a << ", phi = " << *cone.phi << "\n"
            << "c (interval) = " << restricted.c << ", c (unrestricted) = " << scheffe.c
            << "\n\n";

  const BandSpec spec(model, restricted, region);
  write_band_csv(std::cout, band_curve(spec, interval_grid(-1.3, 0.8, 8)));
}
