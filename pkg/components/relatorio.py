import pandas as pd


def rotulo_situacao(algo, cenario, cap_bar):
    """Ex.: 'unrestricted OPTSORT (C̄=55)' ou 'unrestricted GREEDY'"""
    rotulo = f"{cenario} {algo.upper()}"
    if algo == "optsort" and cap_bar not in (None, ""):
        rotulo += f" (C̄={cap_bar})"
    return rotulo


def formatar_tabela_kpis(df_kpis):
    """
    Monta a tabela comparativa Algoritmo+Situação | Rc | Rj | S_t(min)

    Args:
        df_kpis (pd.DataFrame): Linhas no formato do CSV de KPIs

    Returns:
        str: Tabela em texto alinhado
    """
    if df_kpis.empty:
        return "Nenhum resultado."
    tabela = pd.DataFrame({
        "Algoritmo+Situação": [rotulo_situacao(a, s, c) for a, s, c in
                               zip(df_kpis["algo"], df_kpis["scenario"], df_kpis["cap_bar"])],
        "Rc": df_kpis["Rc"].astype(int),
        "Rj": df_kpis["Rj"].astype(int),
        "S_t(min)": df_kpis["St_min"].map(lambda v: f"{v:.3f}"),
        "pph": df_kpis["pph"].map(lambda v: f"{v:.1f}"),
        "Bloqueios": df_kpis["blockages"].astype(int),
    })
    return tabela.to_string(index=False)
