"""
Console summaries for panelspec runs
"""

import sys
from typing import Iterable, Optional

from colorama import Fore, Style, init
init(autoreset=True)

RULE = f"{Fore.CYAN}{'═' * 72}{Style.RESET_ALL}"


def _emit(*args, **kwargs):
    # stdout is reserved for the JSON report
    print(*args, file=sys.stderr, **kwargs)


def print_header(version: str, title: str):
    """Print the run header"""
    _emit(f"""
{RULE}
{Fore.GREEN}panelspec v{version}{Style.RESET_ALL} - {Fore.YELLOW}{title}{Style.RESET_ALL}
{Fore.CYAN}Series specification test for fixed-effects panel models{Style.RESET_ALL}
{RULE}
""", flush=True)


def _verdict(p: float, level: float) -> str:
    if p < level:
        return f"{Fore.RED}rejected{Style.RESET_ALL}"
    return f"{Fore.GREEN}not rejected{Style.RESET_ALL}"


def print_test_summary(result, level: float = 0.05, dropped: Optional[Iterable] = None):
    """Print one test result with both asymptotic decisions"""
    label = "xi_HC" if result.kind == "heteroskedastic" else "xi"
    t_label = "t_HC" if result.kind == "heteroskedastic" else "t"
    lines = [
        f"📐 m_n={result.m_n}  r_n={result.r_n}  k_n={result.k_n}",
        f"📊 {label} = {result.xi:.3f}   (chi2({result.r_n}) 5%: {result.crit_chi2_05:.3f}, "
        f"10%: {result.crit_chi2_10:.3f})   p = {result.p_chi2:.4f}  {_verdict(result.p_chi2, level)}",
        f"📊 {t_label} = {result.t_rn:.3f}   (N(0,1) 5%: {result.crit_normal_05:.3f}, "
        f"10%: {result.crit_normal_10:.3f})   p = {result.p_normal:.4f}  {_verdict(result.p_normal, level)}",
        f"{Fore.CYAN}   t_kn = {result.t_kn:.3f}  no df correction (for comparison){Style.RESET_ALL}",
    ]
    if result.bootstrap_p is not None:
        lines.append(f"🔁 wild bootstrap p = {result.bootstrap_p:.4f}  {_verdict(result.bootstrap_p, level)}")
    if result.post_selection:
        lines.append(f"{Fore.YELLOW}⚠️  post-selection inference: {result.post_selection}{Style.RESET_ALL}")
    if result.degenerate:
        lines.append(f"{Fore.YELLOW}⚠️  restricted residuals are numerically zero{Style.RESET_ALL}")
    dropped = list(dropped or [])
    if dropped:
        lines.append(f"🧹 dropped {len(dropped)} column(s): " + ", ".join(label for label, _ in dropped[:6])
                     + (" ..." if len(dropped) > 6 else ""))
    _emit("\n".join(lines) + "\n", flush=True)


def print_criterion_table(rows, gamma_n: float):
    """Print the data-driven selection table"""
    _emit(f"{Fore.CYAN}Penalized criterion (gamma_n = {gamma_n:.4f}){Style.RESET_ALL}")
    _emit(f"  {'a_n':>4} {'r_n':>5} {'xi':>10} {'penalty':>10} {'criterion':>10}")
    for row in rows:
        mark = f"{Fore.GREEN} ◀{Style.RESET_ALL}" if row.chosen else ""
        _emit(f"  {row.a_n:>4} {row.r_n:>5} {row.xi:>10.3f} {row.penalty:>10.3f} {row.criterion:>10.3f}{mark}")
    _emit("", flush=True)


def print_mc_table(result):
    """Print rejection rates per variant"""
    _emit(f"{Fore.CYAN}Rejection rates over M={result.M} (failures: {result.failures}){Style.RESET_ALL}")
    _emit(f"  {'variant':<16} {'a_n':>4} {'r_n':>5} {'k_n':>5} {'rate':>8} {'mc_se':>8}")
    for cell in result.cells:
        _emit(f"  {cell.variant:<16} {cell.a_n:>4} {cell.r_n:>5} {cell.k_n:>5} "
              f"{cell.rejection_rate:>8.3f} {cell.mc_se:>8.3f}")
    _emit("", flush=True)
