#!/usr/bin/env python3
"""
Run the bundled scenarios and collect their outputs.

Each scenario is a JSON configuration in scenarios/; outputs land in
scenario_outputs/:
1. equal_memories: same memory in both architectures, DD wins
2. better_sd_memories: longer-lived SD memories, SD wins at high rates
3. mu_c_sweep: finite computation rates, simulation only
4. circuit: pre- and post-move fidelities of the transfer circuits
"""

import os
import sys
import time

ROOT = os.path.dirname(os.path.abspath(__file__))

# Add simulation directory to path
sys.path.append(os.path.join(ROOT, 'simulation'))
import cli


class ScenarioGenerator:
    """Runs each scenario through the command-line entry point"""

    def __init__(self, scenarios_dir=os.path.join(ROOT, "scenarios"),
                 output_dir=os.path.join(ROOT, "scenario_outputs"), simulate=True):
        self.scenarios_dir = scenarios_dir
        self.output_dir = output_dir
        self.simulate = simulate
        os.makedirs(self.output_dir, exist_ok=True)

    def scenarios(self):
        return [
            {
                "name": "equal_memories",
                "commands": ["analyze", "simulate"],
                "description": "Equal memories: DD keeps the higher fidelity",
            },
            {
                "name": "better_sd_memories",
                "commands": ["analyze", "simulate"],
                "description": "Better SD memories at mu_e=500, lambda_e=50",
            },
            {
                "name": "mu_c_sweep",
                "commands": ["simulate"],
                "description": "Finite computation rates from 1e3 to 1e5",
            },
            {
                "name": "circuit",
                "commands": ["circuit", "analyze"],
                "description": "Post-move fidelity of the transfer circuits",
            },
        ]

    def run_scenario(self, name, command):
        """Run one command of a scenario; returns (exit code, output path)"""
        if command == "simulate" and not self.simulate:
            return None, None
        config_path = os.path.join(self.scenarios_dir, f"{name}.json")
        extension = "json" if command == "circuit" else "csv"
        out_path = os.path.join(self.output_dir, f"{name}_{command}.{extension}")
        print(f"\n🎬 {name}: {command}")
        print("=" * 60)
        start = time.time()
        code = cli.main([command, "--config", config_path, "--out", out_path])
        print(f"📊 exit code {code} after {time.time() - start:.1f}s -> {out_path}")
        return code, out_path

    def generate_all_scenarios(self):
        """Run every scenario and print a summary"""
        results = {}
        for scenario in self.scenarios():
            print(f"\n🎯 {scenario['description']}")
            for command in scenario["commands"]:
                results[(scenario["name"], command)] = self.run_scenario(scenario["name"], command)

        print("\n" + "=" * 80)
        print("🎬 SCENARIO RUNS COMPLETE")
        print("=" * 80)
        for (name, command), (code, path) in results.items():
            if code is None:
                print(f"⏭️  {name} {command}: skipped")
            elif code in (cli.EXIT_OK, cli.EXIT_UNSTABLE):
                print(f"✅ {name} {command}: {path}")
            else:
                print(f"❌ {name} {command}: exit code {code}")
        return results


def main():
    """Main entry point"""
    print("🎬 Architecture Scenario Runner")
    print("=" * 80)
    simulate = "--no-sim" not in sys.argv[1:]
    generator = ScenarioGenerator(simulate=simulate)
    results = generator.generate_all_scenarios()
    failed = [k for k, (code, _) in results.items() if code not in (None, cli.EXIT_OK, cli.EXIT_UNSTABLE)]
    return 1 if failed else 0


if __name__ == "__main__":
    sys.exit(main())
