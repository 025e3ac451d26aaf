#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "json.hpp"

#include "cdma/channel.hpp"
#include "cdma/errors.hpp"
#include "cdma/experiments.hpp"
#include "cdma/signatures.hpp"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;

nlohmann::json load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw cdma::ConfigError("cannot open config file: " + path);
    nlohmann::json cfg = nlohmann::json::parse(in, nullptr, false);
    if (cfg.is_discarded()) throw cdma::ConfigError("config is not valid JSON: " + path);
    return cfg;
}

void write_table(const cdma::ResultTable& table, const std::string& out_path, bool as_json) {
    std::ofstream out(out_path);
    if (!out) throw cdma::ConfigError("cannot open output file: " + out_path);
    if (as_json)
        table.write_jsonl(out);
    else
        table.write_csv(out);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Overloaded-CDMA power estimation lab"};
    app.require_subcommand(1);

    // construct
    auto* construct = app.add_subcommand("construct", "Build a signature matrix and write it to a file");
    int c_m = 0, c_n = 0;
    std::string c_noise = "known", c_out;
    construct->add_option("--m", c_m, "chip count")->required();
    construct->add_option("--n", c_n, "user count")->required();
    construct->add_option("--noise", c_noise, "known|unknown")
        ->check(CLI::IsMember({"known", "unknown"}));
    construct->add_option("--out", c_out, "output matrix file")->required();

    // audit
    auto* audit = app.add_subcommand("audit", "Print the estimability report of a matrix as JSON");
    std::string a_in, a_noise = "known";
    audit->add_option("--in", a_in, "matrix file")->required();
    audit->add_option("--noise", a_noise, "known|unknown")
        ->check(CLI::IsMember({"known", "unknown"}));

    // find-ud
    auto* findud = app.add_subcommand("find-ud", "Search for a uniquely decodable +/-1 matrix");
    int f_m = 8, f_n = 13, f_tries = 20000;
    std::uint64_t f_seed = 1;
    std::string f_out;
    findud->add_option("--m", f_m, "chip count");
    findud->add_option("--n", f_n, "user count (<= 16)");
    findud->add_option("--seed", f_seed, "search seed");
    findud->add_option("--tries", f_tries, "search budget per stage");
    findud->add_option("--out", f_out, "output matrix file")->required();

    // experiment runners
    std::string cfg_path, out_path;
    bool as_json = false;
    auto add_runner = [&](const char* name, const char* desc) {
        auto* sub = app.add_subcommand(name, desc);
        sub->add_option("--config", cfg_path, "JSON config file")->required();
        sub->add_option("--out", out_path, "output file")->required();
        sub->add_flag("--json", as_json, "emit JSON lines instead of CSV");
        return sub;
    };
    auto* convergence = add_runner("convergence", "Estimate-vs-L convergence study");
    auto* track = add_runner("track", "Power tracking study");
    auto* ber = add_runner("ber", "Four-way BER comparison");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*construct) {
            const auto s = c_noise == "known" ? cdma::construct_known_noise(c_m, c_n)
                                              : cdma::construct_unknown_noise(c_m, c_n);
            cdma::save_matrix(s, c_out);
        } else if (*audit) {
            const auto s = cdma::load_matrix(a_in);
            std::cout << cdma::estimability(s, a_noise == "known").to_json() << '\n';
        } else if (*findud) {
            const auto s = cdma::find_uniquely_decodable(f_m, f_n, f_seed, f_tries);
            cdma::save_matrix(s, f_out);
        } else if (*convergence) {
            write_table(cdma::run_convergence(load_config(cfg_path)), out_path, as_json);
        } else if (*track) {
            write_table(cdma::run_tracking(load_config(cfg_path)), out_path, as_json);
        } else if (*ber) {
            write_table(cdma::run_ber(load_config(cfg_path)), out_path, as_json);
        }
    } catch (const cdma::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const cdma::ParseError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const cdma::BoundExceeded& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const cdma::Error& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return kExitNumerical;
    }
    return 0;
}
