"""
Alocação de trabalhadores às rampas do OPTSORT.

A partir do volume planejado por rampa monta-se a matriz de penalidades Z
(encomendas não processadas em função do número de trabalhadores) e o
algoritmo guloso sequencial distribui os p trabalhadores, incluindo o
movimento em par para rampas que exigem dois operadores.
"""
import itertools
import logging
import math
from dataclasses import dataclass
from typing import FrozenSet, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from optsort_core import (
    ChuteKind, Layout, OptsortError, SortPlan, Violation, WorkerProfile,
    effective_process_ms, to_ms,
)

logger = logging.getLogger(__name__)

# Colunas extras de Z (preenchidas com a última coluna)
PADDING = 4
MAX_ENUMERACOES = 1_000_000
TOL = 1e-9


@dataclass(frozen=True, eq=False)
class PenaltyMatrix:
    Z: np.ndarray
    two_handler: FrozenSet[int] = frozenset()

    @property
    def k(self) -> int:
        return self.Z.shape[0]

    @property
    def columns(self) -> int:
        return self.Z.shape[1]

    def z(self, c: int, w: int) -> float:
        """Penalidade da rampa c com w trabalhadores (colunas além do fim repetem a última)"""
        return float(self.Z[c, min(w, self.columns - 1)])


@dataclass(frozen=True)
class StaffingPlan:
    sigma: Tuple[int, ...]
    penalty: float
    idle: int = 0

    @property
    def assigned(self) -> int:
        return sum(self.sigma)


def penalty_from_load(loads: Sequence[float], process_times: Sequence[float], T: float,
                      exponent: int = 1, two_handler: Sequence[int] = (),
                      max_workers: Optional[int] = None) -> PenaltyMatrix:
    """
    Matriz de penalidades z[c][w] = f(max(0, carga_c - w·⌊T/t_c⌋))
    :param loads: Volume planejado por rampa
    :param process_times: Tempo por encomenda de um trabalhador (s), por rampa
    :param T: Duração do turno (s)
    :param exponent: 1 = encomendas não processadas; 2 = quadrado da fração não
                     processada em relação à capacidade de um trabalhador
    :param two_handler: Índices das rampas que exigem dois operadores
    :param max_workers: Maior número de trabalhadores representado; padrão é o
                        suficiente para zerar todas as rampas
    """
    if any(carga < 0 for carga in loads):
        raise ValueError("cargas devem ser não negativas")
    if len(loads) != len(process_times):
        raise ValueError("um tempo de processamento por rampa")
    pares = frozenset(int(c) for c in two_handler)
    capacidades = [to_ms(T) // max(1, to_ms(t)) for t in process_times]

    if max_workers is None:
        max_workers = 0
        for c, (carga, cap) in enumerate(zip(loads, capacidades)):
            necessarios = math.ceil(carga / cap) if cap > 0 else 0
            if c in pares and carga > 0:
                necessarios = max(2, necessarios)
            max_workers = max(max_workers, necessarios)

    colunas = max_workers + 1 + PADDING
    Z = np.zeros((len(loads), colunas))
    for c, (carga, cap) in enumerate(zip(loads, capacidades)):
        for w in range(colunas):
            processado = 0 if (c in pares and w < 2) else w * cap
            resto = max(0.0, carga - processado)
            Z[c, w] = resto if exponent == 1 else (resto / max(cap, 1)) ** exponent
    return PenaltyMatrix(Z, pares)


def validate_penalties(matrix: PenaltyMatrix) -> List[Violation]:
    """
    Verifica penalidade não crescente, penalidade marginal não crescente (com a
    exceção do patamar positivo) e a coerência do conjunto de rampas de dois operadores
    """
    Z = matrix.Z
    violacoes = []
    for c in range(Z.shape[0]):
        linha = Z[c]
        if np.any(linha < -TOL):
            violacoes.append(Violation(f"Z[{c}]", "z ≥ 0"))
        for w in range(len(linha) - 1):
            if linha[w] < linha[w + 1] - TOL:
                violacoes.append(Violation(f"Z[{c}][{w}]", "penalidade não crescente"))
        for w in range(len(linha) - 2):
            patamar = abs(linha[w] - linha[w + 1]) <= TOL and linha[w] > TOL
            if patamar:
                continue
            if linha[w] - linha[w + 1] < linha[w + 1] - linha[w + 2] - TOL:
                violacoes.append(Violation(f"Z[{c}][{w}]", "penalidade marginal não crescente"))
        if linha.size >= 2 and linha[0] > TOL:
            plano = abs(linha[0] - linha[1]) <= TOL
            if c in matrix.two_handler and not plano:
                violacoes.append(Violation(f"Z[{c}]", "rampa de dois operadores exige z0 = z1"))
            if c not in matrix.two_handler and plano:
                violacoes.append(Violation(f"Z[{c}]", "z0 = z1 > 0 só em rampa de dois operadores"))
    return violacoes


def total_penalty(matrix: PenaltyMatrix, sigma: Sequence[int]) -> float:
    return float(sum(matrix.z(c, w) for c, w in enumerate(sigma)))


def _polir(matrix: PenaltyMatrix, sigma: List[int]) -> List[int]:
    """Aplica a melhor troca de um trabalhador entre duas rampas enquanto ela reduzir a penalidade"""
    while True:
        melhor, troca = 0.0, None
        for a in range(matrix.k):
            if sigma[a] == 0:
                continue
            perda = matrix.z(a, sigma[a] - 1) - matrix.z(a, sigma[a])
            for b in range(matrix.k):
                if b == a:
                    continue
                ganho = matrix.z(b, sigma[b]) - matrix.z(b, sigma[b] + 1)
                if ganho - perda > melhor + TOL:
                    melhor, troca = ganho - perda, (a, b)
        if troca is None:
            return sigma
        a, b = troca
        sigma[a] -= 1
        sigma[b] += 1


def assign_workers(matrix: PenaltyMatrix, p: int, polish: bool = False) -> StaffingPlan:
    """
    Guloso sequencial: a cada passo, o trabalhador vai para a rampa de maior
    redução de penalidade (empate: menor índice). Com rampas de dois
    operadores e pelo menos dois trabalhadores livres, um par vai para a
    rampa de dois operadores quando a redução δc supera δ0 + δ1 (δ0 é a
    redução marginal atual da última rampa escolhida, zero no início).
    Trabalhadores que não reduzem nenhuma penalidade ficam na reserva ociosa.
    :param matrix: Matriz de penalidades
    :param p: Número de trabalhadores
    :param polish: Depois do guloso, aplica trocas de um trabalhador entre rampas até o ótimo local
    """
    if p < 0:
        raise ValueError("p ≥ 0")
    sigma = [0] * matrix.k
    atribuidos = 0
    ultimo = None

    def _marginal(c: int) -> float:
        return matrix.z(c, sigma[c]) - matrix.z(c, sigma[c] + 1)

    while atribuidos < p and matrix.k and max(matrix.z(c, sigma[c]) for c in range(matrix.k)) > TOL:
        ganhos = [_marginal(c) for c in range(matrix.k)]
        k = int(np.argmax(ganhos))
        delta1 = ganhos[k]

        par = None
        if matrix.two_handler and p - atribuidos >= 2:
            delta0 = 0.0 if ultimo is None else _marginal(ultimo)
            reducoes = {j: matrix.z(j, sigma[j]) - matrix.z(j, sigma[j] + 2) for j in sorted(matrix.two_handler)}
            j = max(reducoes, key=lambda j: (reducoes[j], -j))
            delta_c = reducoes[j]
            if delta_c > delta0 + delta1 + TOL or (delta1 <= TOL < delta_c):
                par = j

        if par is not None:
            sigma[par] += 2
            atribuidos += 2
            ultimo = par
        elif delta1 > TOL:
            sigma[k] += 1
            atribuidos += 1
            ultimo = k
        else:
            break

    if polish:
        sigma = _polir(matrix, sigma)
    plano = StaffingPlan(tuple(sigma), total_penalty(matrix, sigma), idle=p - atribuidos)
    logger.info("Equipe alocada: %d trabalhadores em rampas, %d na reserva, penalidade=%.2f",
                atribuidos, plano.idle, plano.penalty)
    return plano


def brute_force_staffing(matrix: PenaltyMatrix, p: int, exact: bool = True) -> StaffingPlan:
    """
    Enumeração exaustiva das composições de p trabalhadores nas k rampas
    :param exact: True exige Σσ = p; False aceita Σσ ≤ p
    """
    k = matrix.k
    if k == 0:
        return StaffingPlan((), 0.0, idle=p)
    total = math.comb(p + k - 1, k - 1) if exact else math.comb(p + k, k)
    if total > MAX_ENUMERACOES:
        raise OptsortError(f"enumeração com {total} alocações excede o limite de {MAX_ENUMERACOES}")

    melhor, melhor_sigma = math.inf, None
    barras = k - 1 if exact else k
    # Estrelas e barras: posições das barras entre p estrelas
    for posicoes in itertools.combinations(range(p + barras), barras):
        sigma, anterior = [], -1
        for pos in posicoes:
            sigma.append(pos - anterior - 1)
            anterior = pos
        sigma.append(p + barras - anterior - 1)
        if not exact:
            sigma = sigma[:k]
        penalidade = total_penalty(matrix, sigma)
        if penalidade < melhor - TOL:
            melhor, melhor_sigma = penalidade, tuple(sigma)
    return StaffingPlan(melhor_sigma, melhor, idle=p - sum(melhor_sigma))


def staffing_for_plan(plan: SortPlan, layout: Layout, T: float, workers: int,
                      exponent: int = 1) -> Tuple[PenaltyMatrix, StaffingPlan]:
    """Penalidades a partir do volume planejado (rampas diretas não recebem equipe) e alocação gulosa"""
    rampas = layout.sort_chutes
    cargas = [0.0 if c.kind == ChuteKind.DIRECT else float(v) for c, v in zip(rampas, plan.planned_load())]
    pares = [j for j, c in enumerate(rampas) if c.two_handler]
    matriz = penalty_from_load(cargas, [c.base_process_time for c in rampas], T, exponent, pares,
                               max_workers=max(workers, 2 if pares else 0))
    return matriz, assign_workers(matriz, workers)


def build_roster(layout: Layout, staffing: StaffingPlan,
                 efficiencies: Sequence[float]) -> List[WorkerProfile]:
    """
    Escala de trabalhadores: as eficiências são consumidas em ordem, primeiro
    pelas rampas (na ordem do layout) e depois pela reserva ociosa
    """
    rampas = layout.sort_chutes
    necessarios = staffing.assigned
    if len(efficiencies) < necessarios:
        raise OptsortError(f"{len(efficiencies)} eficiências para {necessarios} trabalhadores alocados")
    escala, pos = [], 0
    for rampa, n in zip(rampas, staffing.sigma):
        for _ in range(n):
            escala.append(WorkerProfile(pos, float(efficiencies[pos]), rampa.id))
            pos += 1
    for e in efficiencies[pos:]:
        escala.append(WorkerProfile(pos, float(e), None))
        pos += 1
    return escala


def effective_process_times(layout: Layout, staffing: StaffingPlan,
                            efficiencies: Sequence[float]) -> Tuple[Optional[int], ...]:
    """
    Tempo efetivo (ms por encomenda) de cada rampa de triagem
    Rampas diretas usam o tempo nominal; espirais sem equipe (ou de dois
    operadores com menos de dois) devolvem None.
    """
    escala = build_roster(layout, staffing, efficiencies)
    tempos = []
    for rampa in layout.sort_chutes:
        if rampa.kind == ChuteKind.DIRECT:
            tempos.append(rampa.process_ms)
            continue
        eficiencias = [w.efficiency for w in escala if w.chute == rampa.id]
        if rampa.two_handler and len(eficiencias) < 2:
            tempos.append(None)
            continue
        tempos.append(effective_process_ms(rampa.base_process_time, eficiencias))
    return tuple(tempos)


def nominal_process_times(layout: Layout, staffing: StaffingPlan, workers: int) -> Tuple[Optional[int], ...]:
    """Tempos efetivos supondo todos os trabalhadores com eficiência nominal (1.0)"""
    return effective_process_times(layout, staffing, [1.0] * max(workers, staffing.assigned))


def staffing_to_df(staffing: StaffingPlan, chute_ids: Sequence[int]) -> pd.DataFrame:
    """Uma linha (chute, workers) por rampa e a linha 'idle' com a reserva"""
    linhas = [{"chute": cid, "workers": n} for cid, n in zip(chute_ids, staffing.sigma)]
    linhas.append({"chute": "idle", "workers": staffing.idle})
    return pd.DataFrame(linhas, columns=["chute", "workers"])


if __name__ == '__main__':
    matriz = PenaltyMatrix(np.array([[10, 4, 1, 0], [8, 2, 0, 0]], dtype=float))
    print(f"Violações: {validate_penalties(matriz)}")
    print(f"Guloso: {assign_workers(matriz, 2)}")
    print(f"Exaustivo: {brute_force_staffing(matriz, 2)}")
