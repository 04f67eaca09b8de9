import os

import pandas as pd
import yaml


def garantir_pasta(pasta):
    """Cria a pasta de saída se ela ainda não existir"""
    os.makedirs(pasta, exist_ok=True)
    return pasta


def salvar_csv(df, caminho):
    """
    Grava o DataFrame em CSV (sem índice, fim de linha '\\n')

    Args:
        df (pd.DataFrame): Tabela
        caminho (str): Arquivo de saída

    Returns:
        str: Caminho gravado
    """
    df.to_csv(caminho, index=False, lineterminator="\n")
    return caminho


def salvar_yaml(dados, caminho):
    """Grava um dicionário em YAML"""
    with open(caminho, "w", encoding="utf-8") as f:
        yaml.safe_dump(dados, f, sort_keys=False, allow_unicode=True, default_flow_style=None)
    return caminho


def salvar_texto(texto, caminho):
    with open(caminho, "w", encoding="utf-8") as f:
        f.write(texto if texto.endswith("\n") else texto + "\n")
    return caminho


def salvar_excel(tabelas, caminho):
    """
    Grava várias tabelas num único arquivo Excel, uma aba por tabela

    Args:
        tabelas (dict): Nome da aba -> DataFrame
        caminho (str): Arquivo .xlsx

    Returns:
        str: Caminho gravado
    """
    with pd.ExcelWriter(caminho, engine="openpyxl") as writer:
        for nome, df in tabelas.items():
            # O Excel limita o nome da aba a 31 caracteres
            df.to_excel(writer, sheet_name=str(nome)[:31], index=False)
    return caminho
