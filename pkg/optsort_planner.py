"""
Planejamento de turno do OPTSORT: casamento destino -> rampa.

Monta e resolve o MILP de planejamento (variáveis X binárias e Y inteiras),
com pré-alocação das rampas diretas e filtro de layouts restritos (A_ij).
Uma heurística gulosa fornece a solução inicial do branch-and-bound.
"""
import logging
from dataclasses import dataclass, replace
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from optsort_core import (
    ChuteKind, ConfigError, DemandForecast, InfeasibleError, Layout, ObjectiveKind,
    SolveStatus, SolverLimitError, SortPlan, chute_shift_capacity,
)
from optsort_solver import MilpModel, Sense, SolveLimits, solve

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class PlanningProblem:
    """
    Instância do MILP de planejamento

    ``destinations`` e ``columns`` são índices globais (destino e coluna de
    ``layout.sort_chutes``); os vetores ``demand``, ``dest_caps``,
    ``chute_caps`` e ``capacities`` seguem essas ordens. ``fixed`` guarda as
    alocações já decididas para rampas diretas: (destino, coluna, volume).
    """
    forecast: DemandForecast
    layout: Layout
    objective_kind: ObjectiveKind
    destinations: Tuple[int, ...]
    columns: Tuple[int, ...]
    demand: Tuple[int, ...]
    dest_caps: Tuple[int, ...]
    chute_caps: Tuple[int, ...]
    capacities: Tuple[int, ...]
    admissibility: np.ndarray
    fixed: Tuple[Tuple[int, int, int], ...] = ()

    @property
    def n(self) -> int:
        return len(self.destinations)

    @property
    def k(self) -> int:
        return len(self.columns)

    def x_id(self, r: int, c: int) -> int:
        return r * self.k + c

    def y_id(self, r: int, c: int) -> int:
        return self.n * self.k + r * self.k + c

    def big_m(self, r: int, c: int) -> int:
        return min(self.demand[r], self.capacities[c])


def build_problem(forecast: DemandForecast, layout: Layout,
                  objective_kind: ObjectiveKind = ObjectiveKind.PARCELS,
                  process_ms: Optional[Sequence[Optional[int]]] = None) -> PlanningProblem:
    """
    Problema completo (todos os destinos e rampas de triagem)
    :param process_ms: Tempos efetivos por rampa (ms); None numa posição = rampa sem equipe
    """
    if forecast.n != layout.n_destinations:
        raise ConfigError("demand.totals", f"{forecast.n} totais para {layout.n_destinations} destinos")
    if any(b < 0 for b in forecast.totals):
        raise ConfigError("demand.totals", "B_i ≥ 0")
    if forecast.shift_length <= 0:
        raise ConfigError("demand.shift_length", "T > 0")
    rampas = layout.sort_chutes
    if process_ms is None:
        capacidades = [chute_shift_capacity(c, forecast.shift_length) for c in rampas]
    else:
        if len(process_ms) != len(rampas):
            raise ConfigError("process_ms", f"um tempo por rampa de triagem ({len(rampas)})")
        capacidades = [0 if t is None else chute_shift_capacity(c, forecast.shift_length, t)
                       for c, t in zip(rampas, process_ms)]
    return PlanningProblem(
        forecast=forecast,
        layout=layout,
        objective_kind=objective_kind,
        destinations=tuple(range(forecast.n)),
        columns=tuple(range(len(rampas))),
        demand=tuple(int(b) for b in forecast.totals),
        dest_caps=tuple(layout.dest_caps),
        chute_caps=tuple(layout.chute_caps),
        capacities=tuple(capacidades),
        admissibility=layout.admissibility_matrix(),
    )


def assign_direct_chutes(problem: PlanningProblem, spillover: bool = True
                         ) -> Tuple[Dict[int, int], PlanningProblem]:
    """
    Pré-aloca as rampas diretas aos destinos de maior demanda

    Cada rampa direta, na ordem do layout, recebe o destino ainda livre de
    maior B_i que seja admissível para ela (empate: menor índice).
    :param problem: Problema completo
    :param spillover: Se True, o destino fixado continua no problema residual
                      com M_i - 1 rampas e a demanda que sobrar
    :return: (destino -> coluna da rampa direta, problema residual)
    """
    rampas = problem.layout.sort_chutes
    diretas = [c for c in problem.columns if rampas[c].kind == ChuteKind.DIRECT]
    if len(diretas) > problem.n:
        raise ConfigError("chutes", f"{len(diretas)} rampas diretas para {problem.n} destinos")
    if not diretas:
        return {}, problem

    posicao_col = {c: pos for pos, c in enumerate(problem.columns)}
    livres = set(range(problem.n))
    fixados: Dict[int, int] = {}
    fixos = []
    for c in diretas:
        pc = posicao_col[c]
        candidatos = [r for r in livres if problem.demand[r] > 0 and problem.admissibility[r, pc]]
        if not candidatos:
            logger.warning("Rampa direta %d sem destino admissível com demanda", rampas[c].id)
            continue
        r = min(candidatos, key=lambda r: (-problem.demand[r], r))
        livres.discard(r)
        volume = min(problem.demand[r], problem.capacities[pc])
        fixados[problem.destinations[r]] = c
        fixos.append((problem.destinations[r], c, volume))
        logger.info("Destino %d fixado na rampa direta %d (volume %d)",
                    problem.destinations[r] + 1, rampas[c].id, volume)

    manter_cols = [pos for pos, c in enumerate(problem.columns) if c not in diretas]
    manter_dest, demanda, caps = [], [], []
    volume_fixo = {problem.destinations.index(d): v for d, _, v in fixos}
    for r in range(problem.n):
        if r not in volume_fixo:
            manter_dest.append(r)
            demanda.append(problem.demand[r])
            caps.append(problem.dest_caps[r])
            continue
        if spillover:
            restante = problem.demand[r] - volume_fixo[r]
            if restante > 0 and problem.dest_caps[r] > 1:
                manter_dest.append(r)
                demanda.append(restante)
                caps.append(problem.dest_caps[r] - 1)

    residual = replace(
        problem,
        destinations=tuple(problem.destinations[r] for r in manter_dest),
        columns=tuple(problem.columns[p] for p in manter_cols),
        demand=tuple(demanda),
        dest_caps=tuple(caps),
        chute_caps=tuple(problem.chute_caps[p] for p in manter_cols),
        capacities=tuple(problem.capacities[p] for p in manter_cols),
        admissibility=problem.admissibility[np.ix_(manter_dest, manter_cols)],
        fixed=problem.fixed + tuple(fixos),
    )
    return fixados, residual


def build_plan_model(problem: PlanningProblem) -> MilpModel:
    """
    MILP de planejamento

    Variáveis: X_ij binária (id ``x_id``) e Y_ij inteira em [0, big_M_ij]
    (id ``y_id``), big_M_ij = min(B_i, ⌊T/t_j⌋). Restrições, nesta ordem:
    casamentos por destino (uma linha com limites 1 e M_i), destinos por
    rampa, volume por destino, volume por rampa, ligação X ≤ Y ≤ big_M·X e,
    com layout restrito, X_ij ≤ A_ij.
    """
    n, k = problem.n, problem.k
    m = MilpModel("planejamento", Sense.MAX)
    for r in range(n):
        for c in range(k):
            m.add_binary(f"X[{problem.destinations[r] + 1},{problem.columns[c] + 1}]")
    for r in range(n):
        for c in range(k):
            m.add_var(f"Y[{problem.destinations[r] + 1},{problem.columns[c] + 1}]",
                      0, problem.big_m(r, c), integer=True)

    for r in range(n):
        # Destino sem demanda não tem encomenda para satisfazer X ≤ Y
        minimo = 1 if problem.demand[r] > 0 else 0
        m.add_range({problem.x_id(r, c): 1 for c in range(k)}, minimo, problem.dest_caps[r],
                    f"casamentos_d{r}")
    for c in range(k):
        m.add_constraint({problem.x_id(r, c): 1 for r in range(n)}, "<=", problem.chute_caps[c],
                         f"destinos_c{c}")
    for r in range(n):
        m.add_constraint({problem.y_id(r, c): 1 for c in range(k)}, "<=", problem.demand[r],
                         f"demanda_d{r}")
    for c in range(k):
        m.add_constraint({problem.y_id(r, c): 1 for r in range(n)}, "<=", problem.capacities[c],
                         f"capacidade_c{c}")
    for r in range(n):
        for c in range(k):
            x, y = problem.x_id(r, c), problem.y_id(r, c)
            m.add_constraint({x: 1, y: -1}, "<=", 0, f"min_volume_{r}_{c}")
            m.add_constraint({y: 1, x: -problem.big_m(r, c)}, "<=", 0, f"max_volume_{r}_{c}")
    if problem.layout.admissibility is not None:
        for r in range(n):
            for c in range(k):
                m.add_constraint({problem.x_id(r, c): 1}, "<=", int(problem.admissibility[r, c]),
                                 f"admissivel_{r}_{c}")

    if problem.objective_kind == ObjectiveKind.MATCHES:
        m.set_objective({problem.x_id(r, c): 1 for r in range(n) for c in range(k)})
    else:
        m.set_objective({problem.y_id(r, c): 1 for r in range(n) for c in range(k)})
    return m


def check_plan_preconditions(problem: PlanningProblem) -> None:
    """Levanta InfeasibleError com a primeira pré-condição estrutural violada"""
    positivos = [r for r in range(problem.n) if problem.demand[r] > 0]
    if not positivos:
        return
    vagas = sum(min(nc, cap) for nc, cap in zip(problem.chute_caps, problem.capacities))
    if vagas < len(positivos):
        raise InfeasibleError(
            f"{len(positivos)} destinos com demanda para {vagas} vagas destino-rampa",
            precondition="Σ N_j ≥ n",
            hint="retirar o casamento mínimo dos destinos de menor demanda",
        )
    for r in positivos:
        if not any(problem.admissibility[r, c] and problem.capacities[c] > 0 for c in range(problem.k)):
            raise InfeasibleError(
                f"destino {problem.destinations[r] + 1} sem rampa admissível com capacidade",
                precondition="toda linha de A com pelo menos uma rampa utilizável",
            )


def heuristic_plan(problem: PlanningProblem) -> Optional[Tuple[np.ndarray, np.ndarray]]:
    """
    Plano guloso usado como solução inicial

    1. Cada destino com demanda (maior B_i primeiro) recebe uma encomenda na
       rampa admissível com mais capacidade livre.
    2. O restante da demanda completa as rampas já casadas e depois abre novas
       rampas, até M_i.
    3. Vagas que sobram são espalhadas: um novo casamento recebe uma encomenda
       tirada da rampa mais carregada do destino.
    :return: (X, Y) ou None se a heurística não achar casamento para algum destino
    """
    n, k = problem.n, problem.k
    X = np.zeros((n, k), dtype=int)
    Y = np.zeros((n, k), dtype=int)
    livre = np.array(problem.capacities, dtype=int)
    vagas = np.array(problem.chute_caps, dtype=int)
    M = np.array(problem.dest_caps, dtype=int)
    A = problem.admissibility
    ordem = sorted((r for r in range(n) if problem.demand[r] > 0), key=lambda r: (-problem.demand[r], r))

    def _melhor_rampa(r: int) -> Optional[int]:
        candidatos = [c for c in range(k) if A[r, c] and not X[r, c] and vagas[c] > 0 and livre[c] > 0]
        if not candidatos:
            return None
        return max(candidatos, key=lambda c: (livre[c], -c))

    for r in ordem:
        c = _melhor_rampa(r)
        if c is None:
            return None
        X[r, c], Y[r, c] = 1, 1
        livre[c] -= 1
        vagas[c] -= 1

    for r in ordem:
        falta = problem.demand[r] - Y[r].sum()
        for c in sorted(np.flatnonzero(X[r]), key=lambda c: (-livre[c], c)):
            q = min(falta, livre[c])
            Y[r, c] += q
            livre[c] -= q
            falta -= q
        while falta > 0 and X[r].sum() < M[r]:
            c = _melhor_rampa(r)
            if c is None:
                break
            q = min(falta, livre[c])
            X[r, c], Y[r, c] = 1, q
            livre[c] -= q
            vagas[c] -= 1
            falta -= q

    mudou = True
    while mudou:
        mudou = False
        for r in ordem:
            if X[r].sum() >= M[r] or Y[r].max() < 2:
                continue
            c = _melhor_rampa(r)
            if c is None:
                continue
            doadora = int(np.argmax(Y[r]))
            Y[r, doadora] -= 1
            livre[doadora] += 1
            X[r, c], Y[r, c] = 1, 1
            livre[c] -= 1
            vagas[c] -= 1
            mudou = True
    return X, Y


def solve_plan(problem: PlanningProblem, limits: Optional[SolveLimits] = None) -> SortPlan:
    """
    Resolve o problema (residual) e monta o plano completo n×k
    :param problem: Problema, possivelmente já com rampas diretas fixadas
    :param limits: Limites do solver
    :return: SortPlan com as alocações fixas incluídas
    """
    check_plan_preconditions(problem)
    modelo = build_plan_model(problem)

    inicial = None
    heuristica = heuristic_plan(problem)
    if heuristica is not None:
        Xh, Yh = heuristica
        inicial = np.concatenate([Xh.ravel(), Yh.ravel()]).astype(float)
        logger.info("Heurística de planejamento: %d encomendas, %d casamentos",
                    int(Yh.sum()), int(Xh.sum()))

    solucao = solve(modelo, limits, warm_start=inicial)
    if solucao.status == SolveStatus.INFEASIBLE:
        raise InfeasibleError("MILP de planejamento inviável",
                              hint="revisar A_ij, M_i e N_j das rampas restritas")
    if not solucao.has_incumbent:
        raise SolverLimitError("limite do solver atingido sem plano viável")

    layout = problem.layout
    X = np.zeros((layout.n_destinations, layout.k), dtype=int)
    Y = np.zeros((layout.n_destinations, layout.k), dtype=int)
    valores = np.round(solucao.values).astype(int)
    nk = problem.n * problem.k
    if nk:
        X[np.ix_(problem.destinations, problem.columns)] = valores[:nk].reshape(problem.n, problem.k)
        Y[np.ix_(problem.destinations, problem.columns)] = valores[nk:].reshape(problem.n, problem.k)
    diretos = {}
    for d, c, volume in problem.fixed:
        X[d, c], Y[d, c] = 1, volume
        diretos[d] = c

    if problem.objective_kind == ObjectiveKind.MATCHES:
        objetivo = float(X.sum())
    else:
        objetivo = float(Y.sum())
    extra = objetivo - (solucao.objective or 0.0)
    bound = None if solucao.bound is None else solucao.bound + extra
    plano = SortPlan(X=X, Y=Y, objective_value=objetivo, objective_kind=problem.objective_kind,
                     chute_ids=layout.chute_ids(), status=solucao.status, bound=bound, direct=diretos)
    logger.info("Plano resolvido: status=%s objetivo=%s encomendas=%d",
                solucao.status.value, objetivo, plano.planned_parcels)
    return plano


def plan_shift(forecast: DemandForecast, layout: Layout,
               objective_kind: ObjectiveKind = ObjectiveKind.PARCELS,
               limits: Optional[SolveLimits] = None, spillover: bool = True,
               process_ms: Optional[Sequence[Optional[int]]] = None) -> SortPlan:
    """Pipeline de planejamento: problema completo, rampas diretas e MILP residual"""
    problema = build_problem(forecast, layout, objective_kind, process_ms)
    _, residual = assign_direct_chutes(problema, spillover)
    return solve_plan(residual, limits)


def audit_plan(plan: SortPlan, problem: PlanningProblem) -> List[str]:
    """
    Auditor independente das restrições de planejamento sobre o plano completo
    :param problem: Problema completo (``build_problem``), sem fixações
    :return: Lista de violações
    """
    X, Y = plan.X, plan.Y
    violacoes = []
    n, k = problem.layout.n_destinations, problem.layout.k
    if X.shape != (n, k) or Y.shape != (n, k):
        return [f"plano com formato {X.shape}, esperado {(n, k)}"]
    if not np.isin(X, (0, 1)).all():
        violacoes.append("X não binária")
    for i in range(n):
        casamentos = int(X[i].sum())
        if casamentos > problem.dest_caps[i]:
            violacoes.append(f"destino {i + 1}: {casamentos} rampas > M_i={problem.dest_caps[i]}")
        if problem.demand[i] > 0 and casamentos < 1:
            violacoes.append(f"destino {i + 1}: nenhuma rampa")
        if Y[i].sum() > problem.demand[i]:
            violacoes.append(f"destino {i + 1}: volume {Y[i].sum()} > B_i={problem.demand[i]}")
    for j in range(k):
        if X[:, j].sum() > problem.chute_caps[j]:
            violacoes.append(f"coluna {j + 1}: {X[:, j].sum()} destinos > N_j={problem.chute_caps[j]}")
        if Y[:, j].sum() > problem.capacities[j]:
            violacoes.append(f"coluna {j + 1}: volume {Y[:, j].sum()} > capacidade {problem.capacities[j]}")
    for i in range(n):
        for j in range(k):
            limite = min(problem.demand[i], problem.capacities[j])
            if not X[i, j] <= Y[i, j] <= limite * X[i, j]:
                violacoes.append(f"par ({i + 1},{j + 1}): X={X[i, j]} Y={Y[i, j]} big_M={limite}")
            if X[i, j] > problem.admissibility[i, j]:
                violacoes.append(f"par ({i + 1},{j + 1}): casamento não admissível")
    return violacoes


def plan_to_df(plan: SortPlan) -> pd.DataFrame:
    """Uma linha por casamento: destino, rampa, volume planejado e se é rampa direta"""
    linhas = []
    for i, j in zip(*np.nonzero(plan.X)):
        linhas.append({
            "destination": int(i) + 1,
            "chute": plan.chute_ids[j],
            "volume": int(plan.Y[i, j]),
            "direct": plan.direct.get(int(i)) == int(j),
        })
    return pd.DataFrame(linhas, columns=["destination", "chute", "volume", "direct"])


def plan_to_mapping(plan: SortPlan) -> Dict[int, List[List[int]]]:
    """destino -> lista de [rampa, volume], para exportação em YAML"""
    mapa: Dict[int, List[List[int]]] = {}
    for i, j in zip(*np.nonzero(plan.X)):
        mapa.setdefault(int(i) + 1, []).append([int(plan.chute_ids[j]), int(plan.Y[i, j])])
    return mapa
