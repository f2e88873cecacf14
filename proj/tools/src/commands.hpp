#pragma once

#include "config.hpp"

namespace sfbc::cli {

void cmd_gen_data(const json& config);
void cmd_toy(const json& config);
void cmd_train(const json& config);
void cmd_eval(const json& config);
void cmd_bench(const json& config);

}  // namespace sfbc::cli
